"""
Generators of the gauge functions psi parametrizing the tensors with identical data.

Non-attenuated case: any complex psi with psi = g_{-1} on the boundary. Attenuated case: any real psi with psi = g_0 on
the boundary and a prescribed normal derivative rho.

The generated gauges carry closed-form derivatives d, dbar, d^2, d dbar and dbar^2 on the cover nodes of the grid;
gauges given by grid samples fall back to grid differences.
"""
import logging

import numpy as np
from numpy.polynomial import polynomial

from aanalytic.differences import ORDERS, grid_derivative
from tensoray_errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)

# Orders stored by the generated gauges
PSI_ORDERS = (ORDERS.D, ORDERS.DBAR, ORDERS.DD, ORDERS.D_DBAR, ORDERS.DBAR_DBAR)


class PSI_KINDS:
    POISSON_DEFAULT = "poisson_default"
    RADIAL_BLEND = "radial_blend"
    USER_GRID = "user_grid"


def blend_p(t, derivative=0):
    """P(t) = 4 t^3 - 3 t^4: P(1) = 1, P'(1) = 0, vanishing to third order at 0"""
    t = np.asarray(t, dtype=float)
    if derivative == 0:
        return 4.0 * t ** 3 - 3.0 * t ** 4
    if derivative == 1:
        return 12.0 * t ** 2 - 12.0 * t ** 3
    return 24.0 * t - 36.0 * t ** 2


def blend_q(t, derivative=0):
    """Q(t) = t^4 - t^3: Q(1) = 0, Q'(1) = 1, vanishing to third order at 0"""
    t = np.asarray(t, dtype=float)
    if derivative == 0:
        return t ** 4 - t ** 3
    if derivative == 1:
        return 4.0 * t ** 3 - 3.0 * t ** 2
    return 12.0 * t ** 2 - 6.0 * t


class PsiChoice:
    """
    Gauge function psi sampled on the cover nodes of an interior grid (nan elsewhere) with its derivatives, its
    boundary trace and, in the attenuated case, its prescribed normal derivative on the boundary nodes.
    """

    def __init__(self, kind, grid, values, boundary_trace, normal_derivative=None, descriptor=None, derivatives=None):
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.z.shape:
            raise ShapeError(f"Attention, psi of shape {values.shape} does not match the grid {grid.z.shape}.")
        self.kind = kind
        self.grid = grid
        self.values = values
        self.boundary_trace = np.asarray(boundary_trace, dtype=complex)
        self.normal_derivative = None if normal_derivative is None else np.asarray(normal_derivative)
        self.descriptor = descriptor if descriptor is not None else {"kind": kind}
        self.derivatives = dict()
        for order, array in (derivatives or dict()).items():
            array = np.asarray(array, dtype=complex)
            if array.shape != values.shape:
                raise ShapeError(f"Attention, derivative {order} of psi of shape {array.shape} does not match the "
                                 f"grid {grid.z.shape}.")
            self.derivatives[order] = array
        self._differences = dict()

    def derivative(self, order):
        if order == ORDERS.VALUE:
            return self.values
        if order in self.derivatives:
            return self.derivatives[order]
        if order not in self._differences:
            self._differences[order] = grid_derivative(self.values, self.grid.step, order)
        return self._differences[order]

    @property
    def d(self):
        return self.derivative(ORDERS.D)

    @property
    def dbar(self):
        return self.derivative(ORDERS.DBAR)

    @property
    def dd(self):
        return self.derivative(ORDERS.DD)

    @property
    def d_dbar(self):
        return self.derivative(ORDERS.D_DBAR)

    @property
    def dbar_dbar(self):
        return self.derivative(ORDERS.DBAR_DBAR)

    def real_part(self):
        """Gauge Re psi with the derivatives of the real part (d Re psi = (d psi + conj(dbar psi)) / 2, ...)"""
        imag = np.abs(np.imag(self.values[np.isfinite(self.values)]))
        if not imag.size or np.max(imag) == 0.0:
            return self
        real = np.real(self.values).astype(complex)
        derivatives = None
        if self.derivatives:
            derivatives = {
                ORDERS.D: 0.5 * (self.d + np.conj(self.dbar)),
                ORDERS.DBAR: 0.5 * (self.dbar + np.conj(self.d)),
                ORDERS.DD: 0.5 * (self.dd + np.conj(self.dbar_dbar)),
                ORDERS.D_DBAR: np.real(self.d_dbar).astype(complex),
                ORDERS.DBAR_DBAR: 0.5 * (self.dbar_dbar + np.conj(self.dd)),
            }
        return PsiChoice(self.kind, self.grid, real, np.real(self.boundary_trace), self.normal_derivative,
                         {**self.descriptor, "real_part": True}, derivatives)


def _series(coefficients, x, p, radius):
    """sum_{k>=p} c_k k!/(k-p)! x^{k-p} / radius^p, x = z / radius or conj(z) / radius"""
    k = np.arange(coefficients.size, dtype=float)
    falling = np.ones(coefficients.size)
    for m in range(p):
        falling = falling * (k - m)
    if coefficients.size <= p:
        return np.zeros(np.shape(x), dtype=complex)
    return polynomial.polyval(x, (coefficients * falling)[p:]) / radius ** p


def poisson_extension_derivatives(boundary_values, domain, z, orders=(ORDERS.VALUE,)):
    """
    Harmonic extension of boundary samples and its derivatives. The Poisson integral of the trigonometric interpolant
    is the series
        u(z) = sum_{k>=0} c_k (z / R)^k + sum_{k>=1} c_{-k} (conj(z) / R)^k
    (Nyquist mode split between k = M/2 and k = -M/2), whose holomorphic part carries d and the antiholomorphic part
    dbar; mixed derivatives vanish.
    :param boundary_values: complex array (M,)
    :param domain: geometry.domain.Domain
    :param z: complex array of points (|z| slightly above the radius is allowed)
    :param orders: derivative orders, see aanalytic.differences.ORDERS
    :return: dictionary order -> complex array z.shape
    """
    z = np.asarray(z, dtype=complex)
    m = domain.boundary_nodes
    half = m // 2
    c = np.fft.fft(np.asarray(boundary_values, dtype=complex)) / m
    positive = np.concatenate([c[:half], [0.5 * c[half]]])
    negative = np.concatenate([[0.0], c[m - 1:m - half:-1], [0.5 * c[half]]])
    x = z / domain.radius
    out = dict()
    for order in orders:
        p, q = order
        if p and q:
            out[order] = np.zeros(z.shape, dtype=complex)
        elif q:
            out[order] = _series(negative, np.conj(x), q, domain.radius)
        elif p:
            out[order] = _series(positive, x, p, domain.radius)
        else:
            out[order] = _series(positive, x, 0, domain.radius) + _series(negative, np.conj(x), 0, domain.radius)
    return out


def poisson_extension(boundary_values, domain, z, order=ORDERS.VALUE):
    """Harmonic extension of boundary samples (or one of its derivatives) at the points z, complex array z.shape"""
    return poisson_extension_derivatives(boundary_values, domain, z, (order,))[order]


def _polar_to_wirtinger(r, angle, f_r, f_rr, f_t, f_tt, f_rt):
    """Derivatives d, dbar, d^2, d dbar, dbar^2 from the polar derivatives of a function (zero where r = 0)"""
    c, s = np.cos(angle), np.sin(angle)
    safe = np.where(r > 0, r, 1.0)
    fx = c * f_r - s * f_t / safe
    fy = s * f_r + c * f_t / safe
    fxx = c * c * f_rr - 2 * s * c * f_rt / safe + s * s * f_r / safe + 2 * s * c * f_t / safe ** 2 \
        + s * s * f_tt / safe ** 2
    fyy = s * s * f_rr + 2 * s * c * f_rt / safe + c * c * f_r / safe - 2 * s * c * f_t / safe ** 2 \
        + c * c * f_tt / safe ** 2
    fxy = s * c * f_rr + (c * c - s * s) * f_rt / safe - s * c * f_r / safe - (c * c - s * s) * f_t / safe ** 2 \
        - s * c * f_tt / safe ** 2
    out = {
        ORDERS.D: 0.5 * (fx - 1j * fy),
        ORDERS.DBAR: 0.5 * (fx + 1j * fy),
        ORDERS.DD: 0.25 * (fxx - 2j * fxy - fyy),
        ORDERS.D_DBAR: 0.25 * (fxx + fyy),
        ORDERS.DBAR_DBAR: 0.25 * (fxx + 2j * fxy - fyy),
    }
    for order in out:
        out[order] = np.where(r > 0, out[order], 0.0)
    return out


def radial_blend_derivatives(trace, normal_derivative, domain, z, real=False):
    """
    psi(r omega) = g(omega) P(r / R) + R rho(omega) Q(r / R) and its derivatives, g and rho trigonometric interpolants
    of the boundary samples (rho None stands for zero)
    :return: dictionary order -> complex array z.shape, VALUE and PSI_ORDERS
    """
    z = np.asarray(z, dtype=complex)
    radius = domain.radius
    r = np.abs(z)
    t = r / radius
    angle = np.angle(z)

    def interpolant(samples, derivative):
        values = domain.trig_interpolate(samples, angle, derivative)
        return np.real(values) if real else values

    g, g_t, g_tt = (interpolant(trace, k) for k in range(3))
    if normal_derivative is None:
        rho = rho_t = rho_tt = np.zeros(z.shape)
    else:
        rho, rho_t, rho_tt = (interpolant(normal_derivative, k) for k in range(3))
    p0, p1, p2 = (blend_p(t, k) for k in range(3))
    q0, q1, q2 = (blend_q(t, k) for k in range(3))
    out = _polar_to_wirtinger(r, angle,
                              f_r=g * p1 / radius + rho * q1,
                              f_rr=g * p2 / radius ** 2 + rho * q2 / radius,
                              f_t=g_t * p0 + radius * rho_t * q0,
                              f_tt=g_tt * p0 + radius * rho_tt * q0,
                              f_rt=g_t * p1 / radius + rho_t * q1)
    out[ORDERS.VALUE] = g * p0 + radius * rho * q0
    return out


def _on_cover(grid, sampled):
    """Scatter per-node dictionaries of cover samples onto the grid, nan elsewhere"""
    out = dict()
    for order, values in sampled.items():
        array = np.full(grid.z.shape, np.nan + 0j, dtype=complex)
        array[grid.cover] = values
        out[order] = array
    return out


def psi_default_free(ms, domain, grid):
    """
    Default gauge of the non-attenuated reconstruction: harmonic (Poisson) extension of the mode g_{-1}
    :param ms: modes.sequences.ModeSequences of the data
    :param domain: geometry.domain.Domain
    :param grid: aanalytic.sequence_field.InteriorGrid
    :return: PsiChoice
    """
    trace = ms.mode(-1)
    arrays = _on_cover(grid, poisson_extension_derivatives(trace, domain, grid.z[grid.cover],
                                                           (ORDERS.VALUE,) + PSI_ORDERS))
    values = arrays.pop(ORDERS.VALUE)
    logger.debug(f"Harmonic gauge on {int(np.count_nonzero(grid.cover))} cover nodes.")
    return PsiChoice(PSI_KINDS.POISSON_DEFAULT, grid, values, trace, derivatives=arrays)


def psi_radial_blend_free(ms, domain, grid):
    """Alternative gauge of the non-attenuated reconstruction: psi(r omega) = g_{-1}(omega) P(r / R)"""
    trace = ms.mode(-1)
    arrays = _on_cover(grid, radial_blend_derivatives(trace, None, domain, grid.z[grid.cover]))
    values = arrays.pop(ORDERS.VALUE)
    return PsiChoice(PSI_KINDS.RADIAL_BLEND, grid, values, trace, derivatives=arrays)


def psi_radial_blend(trace, normal_derivative, domain, grid):
    """
    Real gauge psi(r omega) = g(omega) P(r / R) + R rho(omega) Q(r / R), with trace g and normal derivative rho
    :param trace: real array (M,)
    :param normal_derivative: real array (M,)
    :return: PsiChoice
    """
    trace = np.real(np.asarray(trace))
    rho = np.real(np.asarray(normal_derivative))
    arrays = _on_cover(grid, radial_blend_derivatives(trace, rho, domain, grid.z[grid.cover], real=True))
    values = np.real(arrays.pop(ORDERS.VALUE)).astype(complex)
    logger.debug(f"Radial blend gauge with |rho| <= {float(np.max(np.abs(rho), initial=0.0)):.3e}.")
    return PsiChoice(PSI_KINDS.RADIAL_BLEND, grid, values, trace, rho, derivatives=arrays)


def psi_user_grid(values, grid, boundary_trace, normal_derivative=None):
    """Gauge given directly by its samples on the interior grid; derivatives by grid differences"""
    values = np.asarray(values, dtype=complex)
    if values.shape != grid.z.shape:
        raise ShapeError(f"Attention, user psi of shape {values.shape} does not match the grid {grid.z.shape}.")
    masked = np.where(grid.cover, values, np.nan + 0j)
    return PsiChoice(PSI_KINDS.USER_GRID, grid, masked, boundary_trace, normal_derivative)


def psi_free_from_rule(rule, ms, domain, grid):
    """Non-attenuated gauge selected by name (one of PSI_KINDS except user_grid)"""
    if rule == PSI_KINDS.POISSON_DEFAULT:
        return psi_default_free(ms, domain, grid)
    elif rule == PSI_KINDS.RADIAL_BLEND:
        return psi_radial_blend_free(ms, domain, grid)
    raise ConfigError(f"Attention, unknown psi rule for the non-attenuated reconstruction: {rule}")


def bump_derivatives(z, radius):
    """w = (1 - |z|^2 / R^2)^2 and its derivatives; w and its normal derivative vanish on the boundary"""
    z = np.asarray(z, dtype=complex)
    s = 1.0 - np.abs(z) ** 2 / radius ** 2
    return {
        ORDERS.VALUE: (s ** 2).astype(complex),
        ORDERS.D: -2.0 * s * np.conj(z) / radius ** 2,
        ORDERS.DBAR: -2.0 * s * z / radius ** 2,
        ORDERS.DD: 2.0 * np.conj(z) ** 2 / radius ** 4,
        ORDERS.D_DBAR: (4.0 * np.abs(z) ** 2 / radius ** 4 - 2.0 / radius ** 2).astype(complex),
        ORDERS.DBAR_DBAR: 2.0 * z ** 2 / radius ** 4,
    }


def perturbed_psi(psi, amplitude):
    """
    Another member of the same gauge class: psi + amplitude (1 - |z|^2 / R^2)^2 keeps the trace and the normal
    derivative on the boundary
    """
    w = bump_derivatives(psi.grid.z, psi.grid.radius)
    derivatives = {order: psi.derivative(order) + amplitude * w[order] for order in PSI_ORDERS}
    return PsiChoice(PSI_KINDS.USER_GRID, psi.grid, psi.values + amplitude * w[ORDERS.VALUE], psi.boundary_trace,
                     psi.normal_derivative, descriptor={"kind": PSI_KINDS.USER_GRID, "base": psi.descriptor,
                                                        "perturbation_amplitude": amplitude},
                     derivatives=derivatives)
