import logging

import numpy as np

from aanalytic.differences import ORDERS, grid_d, grid_dbar, grid_derivative
from aanalytic.operators import bukhgeim_cauchy_derivatives
from tensoray_errors import ConfigError

logger = logging.getLogger(__name__)


class InteriorGrid:
    """
    Cartesian grid of spacing step covering the disk and a few rings beyond it, with three nested node sets:
        mask     |z| <= radius - margin, where the Bukhgeim-Cauchy integrals are evaluated directly,
        support  |z| <= radius + support_rings * step, where the reconstructed tensor is sampled,
        cover    |z| <= radius + cover_rings * step, where the gauge and the attenuation modes are sampled.
    The cover keeps one ring of grid nodes around it so that difference stencils centered on the support only read
    cover nodes.
    """

    def __init__(self, radius, step, margin, padding_nodes=0, support_rings=0.0, cover_rings=0.0):
        if not step > 0:
            raise ConfigError(f"Attention, the interior grid step must be positive, got {step}.")
        if not 0 <= margin < radius:
            raise ConfigError(f"Attention, the evaluation margin must lie in [0, radius), got {margin}.")
        if not 0 <= support_rings <= cover_rings:
            raise ConfigError(f"Attention, the support rings ({support_rings}) must lie in [0, cover rings = "
                              f"{cover_rings}].")
        if cover_rings > 0 and cover_rings > padding_nodes - 1:
            raise ConfigError(f"Attention, {padding_nodes} padding nodes cannot hold {cover_rings} cover rings and "
                              f"their difference stencils.")
        n = int(np.floor(radius / step + 1e-9)) + int(padding_nodes)
        self.radius = float(radius)
        self.step = float(step)
        self.margin = float(margin)
        self.padding_nodes = int(padding_nodes)
        self.support_rings = float(support_rings)
        self.cover_rings = float(cover_rings)
        self.axis = step * np.arange(-n, n + 1)
        self.z = self.axis[:, None] + 1j * self.axis[None, :]
        r = np.abs(self.z)
        slack = 1e-12 * radius
        self.mask = r <= radius - margin + slack
        self.support = r <= self.support_radius + slack
        self.cover = r <= radius + self.cover_rings * step + slack

    @property
    def x_axis(self):
        return self.axis

    @property
    def y_axis(self):
        return self.axis

    @property
    def support_radius(self):
        return self.radius + self.support_rings * self.step

    def describe(self):
        return {"step": self.step, "margin": self.margin, "nodes_per_axis": int(self.axis.size),
                "masked_nodes": int(np.count_nonzero(self.mask)), "support_rings": self.support_rings,
                "cover_rings": self.cover_rings}


class SequenceField:
    """
    Truncated sequence <u_{-1}, u_{-2}, ..., u_{-L}> sampled on a set of nodes of an InteriorGrid (nan elsewhere),
    optionally with the derivatives d^p dbar^q of every component. Derivatives that were not supplied are computed by
    grid differences on first use.
    """

    def __init__(self, grid, values, derivatives=None):
        values = np.asarray(values, dtype=complex)
        if values.shape[:2] != grid.z.shape or values.ndim != 3:
            raise ConfigError(f"Attention, sequence field of shape {values.shape} does not match the grid "
                              f"{grid.z.shape}.")
        self.grid = grid
        self.values = values
        self.derivatives = dict()
        for order, array in (derivatives or dict()).items():
            array = np.asarray(array, dtype=complex)
            if array.shape != values.shape:
                raise ConfigError(f"Attention, derivative {order} of shape {array.shape} does not match the sequence "
                                  f"field {values.shape}.")
            self.derivatives[order] = array
        self._differences = dict()

    @property
    def length(self):
        return self.values.shape[2]

    def component(self, k):
        return self.values[:, :, k]

    def has_derivative(self, order):
        return order == ORDERS.VALUE or order in self.derivatives

    def derivative(self, order):
        """d^p dbar^q of all the components, array (nx, ny, L)"""
        if order == ORDERS.VALUE:
            return self.values
        if order in self.derivatives:
            return self.derivatives[order]
        if order not in self._differences:
            self._differences[order] = grid_derivative(self.values, self.grid.step, order)
        return self._differences[order]

    @classmethod
    def from_cauchy(cls, bseq, domain, grid, orders=(ORDERS.VALUE,)):
        """Sample the Bukhgeim-Cauchy extension of a boundary sequence (and its derivatives) on the masked nodes"""
        orders = tuple(dict.fromkeys((ORDERS.VALUE,) + tuple(orders)))
        computed = bukhgeim_cauchy_derivatives(bseq, domain, grid.z[grid.mask], grid.margin, orders)
        arrays = dict()
        for order in orders:
            arrays[order] = np.full(grid.z.shape + (bseq.length,), np.nan + 0j, dtype=complex)
            arrays[order][grid.mask] = computed[order]
        values = arrays.pop(ORDERS.VALUE)
        return cls(grid, values, arrays)

    @classmethod
    def from_function(cls, grid, func, nodes=None):
        """Sample func(z) -> (..., L) on the given nodes of the grid (default the masked nodes)"""
        nodes = grid.mask if nodes is None else nodes
        sample = np.asarray(func(grid.z[nodes]), dtype=complex)
        values = np.full(grid.z.shape + (sample.shape[-1],), np.nan + 0j, dtype=complex)
        values[nodes] = sample
        return cls(grid, values)


def l_analytic_residual(sf, analytic=True):
    """
    sup over the masked nodes and the components of |dbar u_{-n} + d u_{-n-1}|. The stored derivatives are used when
    analytic is True and the field carries them, central differences otherwise (only the nodes whose four neighbors
    hold values are then tested). The last component has no successor and is not tested.
    :param sf: SequenceField
    :param analytic: prefer the stored derivatives
    :return: float
    """
    if sf.length < 2:
        raise ConfigError("Attention, the L-analyticity residual needs at least two components.")
    if analytic and sf.has_derivative(ORDERS.D) and sf.has_derivative(ORDERS.DBAR):
        dbar = sf.derivative(ORDERS.DBAR)[..., :-1]
        d = sf.derivative(ORDERS.D)[..., 1:]
        method = "stored derivatives"
    else:
        step = sf.grid.step
        dbar = grid_dbar(sf.values[..., :-1], step)
        d = grid_d(sf.values[..., 1:], step)
        method = "central differences"
    residual = np.abs(dbar + d)[sf.grid.mask]
    tested = np.isfinite(residual)
    if not np.any(tested):
        raise ConfigError("Attention, the grid is too coarse: no node has four evaluated neighbors.")
    worst = float(np.max(residual[tested]))
    logger.debug(f"L-analyticity residual by {method}: {worst:.3e}")
    return worst
