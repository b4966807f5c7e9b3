"""
Reconstruction of a tensor field F_psi with prescribed (attenuated) X-ray data, one tensor per gauge psi.

Non-attenuated data: <u_0, u_{-2}, ...> = B g^even, u_{-1} = psi, <u_{-3}, u_{-5}, ...> = B g^odd and
    f0 = 2 Re(d psi),    f2 = dbar psi + d u_{-3}.
Attenuated data: <v_{-2}, v_{-4}, ...> = B g_h^even, <v_{-3}, v_{-5}, ...> = B g_h^odd, u_n = sum_j beta_j v_{n-j},
u_0 = psi, u_{-1} = -(dbar psi + d u_{-2}) / a and
    f0 = 2 Re(d u_{-1}) + a psi,    f2 = dbar u_{-1} + d u_{-3} + a u_{-2}.
The derivatives of the Bukhgeim-Cauchy integrals are integrals of the differentiated kernels and the gauges carry
closed-form derivatives; only the modes of the integrating factor and the attenuation are differentiated on the grid.
Every quantity is sampled on the support nodes of the grid, which reach 1.5 grid steps beyond the boundary.
"""
import logging

import numpy as np

import constant_config
from aanalytic.differences import ORDERS, grid_d, grid_dbar
from aanalytic.operators import range_residual
from aanalytic.sequence_field import InteriorGrid, SequenceField, l_analytic_residual
from attenuation.pack import convolve_modes, u_from_v
from fields.model import assemble_tensor
from modes.sequences import angular_modes, attenuated_data_modes, build_even, build_odd
from reconstruct.extension import CONTINUATION_SAMPLES, bilinear, continued_cauchy, continued_cauchy_field
from reconstruct.psi import psi_default_free, psi_radial_blend
from tensoray_errors import ConfigError, ShapeError
from transport.fan import make_fan, relative_fan_error

logger = logging.getLogger(__name__)

# Lower bound below which the attenuated reconstruction refuses to divide by a
MIN_ATTENUATION_GUARD = 1e-6
# Grid rings beyond the boundary: nodes of the tensor, nodes of the gauge and of the attenuation modes, array padding
SUPPORT_RINGS = 1.5
COVER_RINGS = 3.0
GRID_PADDING_NODES = 4
# Derivatives of the v sequences needed by the attenuated formulas
ATTENUATED_ORDERS = (ORDERS.D, ORDERS.DBAR, ORDERS.DD, ORDERS.D_DBAR)


def make_grid(domain, step=None, margin=None):
    """
    Interior grid of the pipelines: Bukhgeim-Cauchy integrals on |z| <= radius - margin, tensor nodes up to
    radius + 1.5 step, gauge and attenuation modes up to radius + 3 step
    """
    step = step or constant_config.DEFAULT_GRID_STEP * domain.radius
    margin = constant_config.DEFAULT_MARGIN_FRACTION * domain.radius if margin is None else margin
    if not 0 < margin < domain.radius / CONTINUATION_SAMPLES:
        raise ConfigError(f"Attention, the evaluation margin must lie in (0, radius / {CONTINUATION_SAMPLES}) for the "
                          f"radial continuation, got {margin}.")
    return InteriorGrid(domain.radius, step, margin, padding_nodes=GRID_PADDING_NODES, support_rings=SUPPORT_RINGS,
                        cover_rings=COVER_RINGS)


def check_range(bseq, domain, tol, label):
    """sup norm of (I + iH) bseq, with a warning (no abort) above tol"""
    sup = range_residual(bseq, domain)["sup"]
    if sup > tol:
        logger.warning(f"Range condition of {label} violated: residual {sup:.3e} above the tolerance {tol:.1e}. "
                       f"Reconstructing anyway.")
    return sup


def interleave(even, odd):
    """<e_0, o_0, e_1, o_1, ...> along the last axis"""
    le, lo = even.shape[-1], odd.shape[-1]
    if le not in (lo, lo + 1):
        raise ShapeError(f"Attention, cannot interleave sequences of lengths {le} and {lo}.")
    out = np.zeros(np.broadcast_shapes(even.shape[:-1], odd.shape[:-1]) + (le + lo,), dtype=complex)
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out


class ReconstructionResult:
    """
    Output of a reconstruction pipeline: the gridded tensor F_psi, its complex decomposition on the interior grid, the
    negative modes u_0, u_{-1}, u_{-2}, ... of the solution of the transport equation and the diagnostics
    """

    def __init__(self, tensor, f0, f2, grid, modes, psi, diagnostics, attenuation_name=None):
        self.tensor = tensor
        self.f0 = f0
        self.f2 = f2
        self.grid = grid
        self.modes = modes
        self.psi = psi
        self.diagnostics = diagnostics
        self.attenuation_name = attenuation_name


def on_support(values, grid):
    return np.where(grid.support, values, np.nan)


def _tensor(f0, f2, grid, name):
    """Gridded tensor of (f0, f2) sampled on the support nodes, zero elsewhere"""
    broken = grid.support & ~(np.isfinite(f0) & np.isfinite(f2))
    if np.any(broken):
        raise ConfigError(f"Attention, the reconstructed tensor is not finite on {int(np.count_nonzero(broken))} "
                          f"support nodes: the grid has too few cover rings.")
    f0 = np.where(grid.support, np.real(f0), 0.0)
    f2 = np.where(grid.support, f2, 0.0)
    return assemble_tensor(f0, f2, grid.x_axis, grid.y_axis, name=name)


def mode_system_residual(modes, grid, a_grid=None):
    """
    sup over the masked grid nodes of the homogeneous mode equations d u_{m-1} + dbar u_{m+1} + a u_m = 0 for m = -1
    and m <= -3 (u_1 = conj(u_{-1})), the equations the constructed modes must satisfy away from the source modes 0, -2.
    Derivatives by central differences.
    """
    lowest = min(modes)

    def mode(n):
        return np.conj(modes[-n]) if n > 0 else modes[n]

    worst = 0.0
    for m in [-1] + list(range(-3, lowest, -1)):
        res = grid_d(mode(m - 1), grid.step) + grid_dbar(mode(m + 1), grid.step)
        if a_grid is not None:
            res = res + a_grid * mode(m)
        res = res[grid.mask]
        finite = np.abs(res[np.isfinite(res)])
        if finite.size:
            worst = max(worst, float(np.max(finite)))
    return worst


def reconstruct_free(fan, psi=None, truncation=constant_config.DEFAULT_MODE_TRUNCATION, grid=None,
                     tol_range=constant_config.DEFAULT_TOL_RANGE):
    """
    Tensor field F_psi whose X-ray data is the given non-attenuated fan
    :param fan: transport.fan.FanData
    :param psi: reconstruct.psi.PsiChoice on grid, default the harmonic extension of g_{-1}
    :param truncation: N
    :param grid: InteriorGrid, default make_grid(fan.domain)
    :param tol_range: tolerance of the range conditions (warning only)
    :return: ReconstructionResult
    """
    domain = fan.domain
    grid = grid or make_grid(domain)
    ms = angular_modes(fan, truncation)
    g_even, g_odd = build_even(ms), build_odd(ms)
    residuals = {g_even.role: check_range(g_even, domain, tol_range, "g_even"),
                 g_odd.role: check_range(g_odd, domain, tol_range, "g_odd")}
    psi = psi or psi_default_free(ms, domain, grid)
    if psi.grid is not grid:
        raise ShapeError("Attention, psi must be sampled on the reconstruction grid.")

    even = continued_cauchy_field(g_even, domain, grid, (ORDERS.D, ORDERS.DBAR))
    odd = continued_cauchy_field(g_odd, domain, grid, (ORDERS.D, ORDERS.DBAR))
    modes = {0: even.component(0), -1: on_support(psi.values, grid)}
    for k in range(1, even.length):
        modes[-2 * k] = even.component(k)
    for k in range(odd.length):
        modes[-3 - 2 * k] = odd.component(k)

    f0 = 2.0 * np.real(psi.d)
    f2 = psi.dbar + odd.derivative(ORDERS.D)[..., 0]
    tensor = _tensor(f0, f2, grid, "F_psi")
    diagnostics = {
        "range_residuals": residuals,
        "l_analytic_even": l_analytic_residual(even),
        "l_analytic_odd": l_analytic_residual(odd) if odd.length > 1 else 0.0,
        "mode_system": mode_system_residual(modes, grid),
        "u0_imaginary": float(np.nanmax(np.abs(np.imag(modes[0])))),
        "tensor_radius": grid.support_radius,
        "grid": grid.describe(),
        "psi": psi.descriptor,
    }
    logger.info(f"Non-attenuated reconstruction done: {diagnostics}")
    return ReconstructionResult(tensor, on_support(f0, grid), on_support(f2, grid), grid, modes, psi, diagnostics)


class AttenuatedModes:
    """
    Intermediate quantities of the attenuated pipelines: data modes, the v sequence generated by the Bukhgeim-Cauchy
    operator (with its derivatives), the u sequence <u_{-2}, u_{-3}, ...> and the boundary combination
    d u_{-2} + a g_{-1} entering both the compatibility condition and the prescribed normal derivative of psi
    """

    def __init__(self, fan, pack, truncation, tol_range=constant_config.DEFAULT_TOL_RANGE):
        domain = fan.domain
        self.domain = domain
        self.pack = pack
        self.grid = pack.grid
        self.ms = angular_modes(fan, truncation)
        self.gamma, self.g_h, self.g_h_even, self.g_h_odd = attenuated_data_modes(fan, pack.boundary_factor(),
                                                                                  truncation)
        self.range_residuals = {self.g_h_even.role: check_range(self.g_h_even, domain, tol_range, "g_h_even"),
                                self.g_h_odd.role: check_range(self.g_h_odd, domain, tol_range, "g_h_odd")}
        self.v_even = continued_cauchy_field(self.g_h_even, domain, self.grid, ATTENUATED_ORDERS)
        self.v_odd = continued_cauchy_field(self.g_h_odd, domain, self.grid, ATTENUATED_ORDERS)
        self.v = SequenceField(self.grid, interleave(self.v_even.values, self.v_odd.values),
                               {order: interleave(self.v_even.derivative(order), self.v_odd.derivative(order))
                                for order in ATTENUATED_ORDERS})
        self.u, self.truncation_loss = u_from_v(self.v, pack)
        self.a_boundary = pack.on_boundary(pack.a_values)
        self.combination = self.boundary_du2() + self.a_boundary * self.ms.mode(-1)

    def boundary_du2(self):
        """
        d u_{-2} on the boundary nodes by the Leibniz rule: traces of beta and v (the data g_h), d v from the
        differentiated Cauchy kernels continued to the boundary, d beta interpolated from the cover nodes
        """
        domain = self.domain
        v_trace = interleave(self.g_h_even.components, self.g_h_odd.components)
        dv = interleave(*(continued_cauchy(bseq, domain, domain.zeta, self.grid.margin, (ORDERS.D,))[ORDERS.D]
                          for bseq in (self.g_h_even, self.g_h_odd)))
        beta_trace = self.pack.on_boundary(self.pack.beta)
        dbeta = bilinear(self.pack.mode_derivatives(self.pack.beta, (ORDERS.D,))[ORDERS.D], self.grid, domain.zeta)
        first, _ = convolve_modes(v_trace, dbeta)
        second, _ = convolve_modes(dv, beta_trace)
        return first[:, 0] + second[:, 0]

    @property
    def g0(self):
        return np.real(self.ms.mode(0))

    def compat_residual(self):
        """d_tau g_0 + 2 Im e^{-i eta} (d u_{-2} + a g_{-1}) on the boundary nodes"""
        tangential = np.real(self.domain.boundary_derivative(self.g0))
        return tangential + 2.0 * np.imag(np.exp(-1j * self.domain.normal_angle) * self.combination)

    def normal_derivative(self):
        """rho = -2 Re e^{-i eta} (d u_{-2} + a g_{-1})"""
        return -2.0 * np.real(np.exp(-1j * self.domain.normal_angle) * self.combination)


def compat_check(fan, pack, truncation=None, attenuated_modes=None):
    """
    sup norm over the boundary nodes of the compatibility condition linking g_0 to the attenuated modes
    :param fan: FanData
    :param pack: attenuation.pack.AttenuationPack with modes
    :param truncation: N, default the truncation of the pack
    :param attenuated_modes: AttenuatedModes already built for (fan, pack)
    :return: float
    """
    am = attenuated_modes or AttenuatedModes(fan, pack, truncation or pack.truncation)
    return float(np.max(np.abs(am.compat_residual())))


def psi_default_att(fan, pack, truncation=None, attenuated_modes=None):
    """
    Default gauge of the attenuated reconstruction: the real radial blend with trace g_0 and normal derivative
    -2 Re e^{-i eta} (d u_{-2} + a g_{-1})
    """
    am = attenuated_modes or AttenuatedModes(fan, pack, truncation or pack.truncation)
    return psi_radial_blend(am.g0, am.normal_derivative(), am.domain, am.grid)


def reconstruct_att(fan, pack, psi=None, truncation=None, min_a=constant_config.DEFAULT_MIN_ATTENUATION,
                    tol_range=constant_config.DEFAULT_TOL_RANGE, tol_compat=constant_config.DEFAULT_TOL_COMPAT):
    """
    Tensor field F_psi whose attenuated X-ray data is the given fan
    :param fan: FanData
    :param pack: AttenuationPack of the attenuation, with modes, built on the reconstruction grid
    :param psi: PsiChoice, default psi_default_att; only its real part is used
    :param truncation: N, default the truncation of the pack
    :param min_a: lower bound of the attenuation on the closed disk required to divide by a
    :param tol_range: tolerance of the range conditions (warning only)
    :param tol_compat: tolerance of the compatibility condition (warning only)
    :return: ReconstructionResult
    """
    if not min_a >= MIN_ATTENUATION_GUARD:
        raise ConfigError(f"Attention, the attenuated reconstruction needs min_a >= {MIN_ATTENUATION_GUARD}, "
                          f"got {min_a}.")
    disk = np.abs(pack.points) <= fan.domain.radius * (1.0 + 1e-12)
    observed = float(np.min(pack.a_values[disk]))
    if observed < min_a:
        raise ConfigError(f"Attention, the attenuation '{pack.attenuation_name}' reaches {observed}, below the "
                          f"guard min_a = {min_a}.")
    grid = pack.grid
    am = AttenuatedModes(fan, pack, truncation or pack.truncation, tol_range)
    compat = float(np.max(np.abs(am.compat_residual())))
    if compat > tol_compat:
        logger.warning(f"Compatibility condition violated: residual {compat:.3e} above the tolerance "
                       f"{tol_compat:.1e}. Reconstructing anyway.")
    psi = psi or psi_default_att(fan, pack, attenuated_modes=am)
    if psi.grid is not grid:
        raise ShapeError("Attention, psi must be sampled on the grid of the attenuation pack.")
    psi = psi.real_part()

    a = pack.mode_derivatives(pack.a_values, (ORDERS.VALUE, ORDERS.D, ORDERS.DBAR))
    a_grid = np.real(a[ORDERS.VALUE])
    psi_real = np.real(psi.values)
    u2 = am.u.component(0)
    du = am.u.derivative(ORDERS.D)
    du2, du3 = du[..., 0], du[..., 1]
    numerator = psi.dbar + du2
    with np.errstate(invalid="ignore", divide="ignore"):
        u1 = -numerator / a_grid
        du1 = -((psi.d_dbar + am.u.derivative(ORDERS.DD)[..., 0]) / a_grid - numerator * a[ORDERS.D] / a_grid ** 2)
        dbar_u1 = -((psi.dbar_dbar + am.u.derivative(ORDERS.D_DBAR)[..., 0]) / a_grid
                    - numerator * a[ORDERS.DBAR] / a_grid ** 2)
    f0 = 2.0 * np.real(du1) + a_grid * psi_real
    f2 = dbar_u1 + du3 + a_grid * u2
    tensor = _tensor(f0, f2, grid, "F_psi_attenuated")

    modes = {0: on_support(psi_real.astype(complex), grid), -1: on_support(u1, grid)}
    for p in range(am.u.length):
        modes[-2 - p] = am.u.component(p)
    diagnostics = {
        "range_residuals": am.range_residuals,
        "compat": compat,
        "truncation_loss": am.truncation_loss,
        "l_analytic_v_even": l_analytic_residual(am.v_even),
        "l_analytic_v_odd": l_analytic_residual(am.v_odd) if am.v_odd.length > 1 else 0.0,
        "mode_system": mode_system_residual(modes, grid, a_grid),
        "pack": pack.describe(),
        "tensor_radius": grid.support_radius,
        "grid": grid.describe(),
        "psi": psi.descriptor,
    }
    logger.info(f"Attenuated reconstruction done: {diagnostics}")
    return ReconstructionResult(tensor, on_support(f0, grid), on_support(f2, grid), grid, modes, psi, diagnostics,
                                attenuation_name=pack.attenuation_name)


def assemble_u(result, z, phi, tol_imag=1e-10):
    """
    Solution of the transport equation synthesized from the constructed modes
        u = u_0 + sum_{n>=1} (u_{-n} e^{-i n phi} + conj(u_{-n}) e^{i n phi})
    with the modes interpolated bilinearly at z
    :param result: ReconstructionResult
    :param z: complex interior point(s)
    :param phi: direction angle(s), broadcast against z
    :param tol_imag: imaginary part of u_0 tolerated before a warning
    :return: real array
    """
    z, phi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(phi, dtype=float))
    u0 = bilinear(result.modes[0], result.grid, z)
    imag = float(np.max(np.abs(np.imag(u0)), initial=0.0))
    if imag > tol_imag:
        logger.warning(f"Synthesized solution has an imaginary part {imag:.3e}, discarded.")
    total = np.real(u0)
    for n in range(1, -min(result.modes) + 1):
        total = total + 2.0 * np.real(bilinear(result.modes[-n], result.grid, z) * np.exp(-1j * n * phi))
    return total


def roundtrip(result, fan, attenuation=None, h_ray=None, threads=None, show_progress=False):
    """
    Forward data of the reconstructed tensor compared with the input data
    :return: (FanData of F_psi, sup relative error)
    """
    data = make_fan(result.tensor, attenuation, fan.domain, fan.K, h_ray=h_ray, threads=threads,
                    show_progress=show_progress)
    error = relative_fan_error(fan, data)
    logger.info(f"Roundtrip relative data error: {error:.3e}")
    return data, error
