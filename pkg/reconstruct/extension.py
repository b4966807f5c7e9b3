"""
Helpers moving interior quantities towards and across the boundary: bilinear sampling of grid arrays and the radial
continuation of Bukhgeim-Cauchy integrals from three rings inside the evaluation disk.

Beyond |z| = radius - margin the integrals are not evaluated directly; their values (and derivatives) are continued by
the quadratic polynomial in r through the samples at the radii (radius - margin) - k margin, k = 0, 1, 2, along the ray
of the target point.
"""
import numpy as np
from scipy.interpolate import RegularGridInterpolator

from aanalytic.differences import ORDERS
from aanalytic.operators import bukhgeim_cauchy_derivatives
from aanalytic.sequence_field import SequenceField
from tensoray_errors import ConfigError

# Number of rings sampled by the radial continuation (quadratic polynomial in r)
CONTINUATION_SAMPLES = 3


def bilinear(values, grid, points):
    """
    Bilinear interpolation of a (possibly complex) grid array at arbitrary points; nan entries are read as zero
    :param values: array (nx, ny, ...) on grid
    :param grid: aanalytic.sequence_field.InteriorGrid
    :param points: complex array
    :return: array points.shape + values.shape[2:]
    """
    values = np.nan_to_num(np.asarray(values))
    pts = np.stack([np.real(points).ravel(), np.imag(points).ravel()], axis=-1)
    out = list()
    for part in (values.real, values.imag) if np.iscomplexobj(values) else (values,):
        interp = RegularGridInterpolator((grid.x_axis, grid.y_axis), part, method="linear", bounds_error=False,
                                         fill_value=0.0)
        out.append(interp(pts))
    res = out[0] + 1j * out[1] if len(out) == 2 else out[0]
    return res.reshape(np.shape(points) + values.shape[2:])


def lagrange_weights(nodes, x):
    """
    Weights w_k(x) of the interpolating polynomial through the nodes: p(x) = sum_k w_k(x) f(nodes_k)
    :param nodes: distinct 1-d nodes
    :param x: evaluation abscissae (any shape)
    :return: array x.shape + (len(nodes),)
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.asarray(x, dtype=float)
    weights = np.ones(x.shape + (nodes.size,))
    for k in range(nodes.size):
        for m in range(nodes.size):
            if m != k:
                weights[..., k] *= (x - nodes[m]) / (nodes[k] - nodes[m])
    return weights


def radial_continuation(evaluate, points, inner, spacing, samples=CONTINUATION_SAMPLES):
    """
    Continue a smooth quantity known on |z| <= inner to the given points by polynomial interpolation in r of its
    samples at the radii inner - k spacing (k < samples) along the ray of each point
    :param evaluate: callable mapping complex points (P,) to a dictionary of arrays (P, ...)
    :param points: complex array of nonzero target points
    :param inner: radius of the outermost sample ring
    :param spacing: distance between consecutive sample rings
    :param samples: number of sample rings
    :return: dictionary of arrays points.shape + (...)
    """
    if not inner - (samples - 1) * spacing > 0:
        raise ConfigError(f"Attention, the radial continuation rings (outermost {inner}, spacing {spacing}) do not fit "
                          f"inside the disk.")
    points = np.asarray(points, dtype=complex)
    flat = points.ravel()
    r = np.abs(flat)
    omega = flat / np.where(r > 0, r, 1.0)
    radii = inner - spacing * np.arange(samples)
    sampled = evaluate(np.concatenate([rk * omega for rk in radii]))
    weights = lagrange_weights(radii, r)
    out = dict()
    for key, values in sampled.items():
        stacked = values.reshape((samples, flat.size) + values.shape[1:])
        w = weights.T.reshape((samples, flat.size) + (1,) * (values.ndim - 1))
        out[key] = np.sum(w * stacked, axis=0).reshape(points.shape + values.shape[1:])
    return out


def continued_cauchy(bseq, domain, z, margin, orders=(ORDERS.VALUE,)):
    """
    Bukhgeim-Cauchy extension of a boundary sequence and its derivatives at points of the closed disk (and slightly
    beyond): direct evaluation on |z| <= radius - margin, radial continuation elsewhere
    :return: dictionary order -> complex array z.shape + (L,)
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    inner = domain.radius - margin
    direct = np.abs(flat) <= inner + 1e-12 * domain.radius
    out = {order: np.zeros((flat.size, bseq.length), dtype=complex) for order in orders}
    if np.any(direct):
        computed = bukhgeim_cauchy_derivatives(bseq, domain, flat[direct], margin, orders)
        for order in orders:
            out[order][direct] = computed[order]
    if not np.all(direct):
        continued = radial_continuation(lambda pts: bukhgeim_cauchy_derivatives(bseq, domain, pts, margin, orders),
                                        flat[~direct], inner, margin)
        for order in orders:
            out[order][~direct] = continued[order]
    return {order: values.reshape(z.shape + (bseq.length,)) for order, values in out.items()}


def continued_cauchy_field(bseq, domain, grid, orders=(ORDERS.VALUE,)):
    """
    SequenceField of the Bukhgeim-Cauchy extension (and its derivatives) on the support nodes of the grid
    :param bseq: modes.sequences.BoundarySeq
    :param domain: geometry.domain.Domain
    :param grid: aanalytic.sequence_field.InteriorGrid
    :param orders: derivative orders to compute, see aanalytic.differences.ORDERS
    :return: SequenceField
    """
    orders = tuple(dict.fromkeys((ORDERS.VALUE,) + tuple(orders)))
    computed = continued_cauchy(bseq, domain, grid.z[grid.support], grid.margin, orders)
    arrays = dict()
    for order in orders:
        arrays[order] = np.full(grid.z.shape + (bseq.length,), np.nan + 0j, dtype=complex)
        arrays[order][grid.support] = computed[order]
    values = arrays.pop(ORDERS.VALUE)
    return SequenceField(grid, values, arrays)
