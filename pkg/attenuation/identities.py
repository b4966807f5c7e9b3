"""
Numerical checks of the identities satisfied by the integrating factor:
    theta . grad h = -a,
    the negative angular modes of e^{-h} vanish,
    alpha * beta = delta,
    dbar alpha_0 = 0,  dbar alpha_1 = a alpha_0,  dbar alpha_{k+1} + d alpha_{k-1} = a alpha_k   (k >= 1),
    dbar beta_0 = 0,   dbar beta_1 = -a beta_0,   dbar beta_{k+1} + d beta_{k-1} = -a beta_k    (k >= 1).
"""
import numpy as np

from aanalytic.differences import grid_d, grid_dbar
from attenuation.integrating_factor import LineTables
from geometry.domain import angle_grid, direction


def transport_residual(attenuation, points, angle_nodes, radon_step, padding, step=1e-3):
    """
    sup over the points and the direction nodes of |theta . grad h + a| with the directional derivative taken by central
    differences of step `step` along theta
    """
    points = np.asarray(points, dtype=complex)
    a = attenuation(points)
    worst = 0.0
    for phi in angle_grid(angle_nodes):
        tables = LineTables(attenuation, phi, radon_step, padding)
        w = direction(phi)
        derivative = (tables.h(points + step * w) - tables.h(points - step * w)) / (2.0 * step)
        worst = max(worst, float(np.max(np.abs(derivative + a))))
    return worst


def _sup(values, region=None):
    if region is not None:
        values = values[region]
    finite = np.abs(values[np.isfinite(values)])
    return float(np.max(finite)) if finite.size else 0.0


def mode_recursion_residuals(pack):
    """
    sup over the grid nodes of the closed disk of the residuals of the first order systems solved by the modes
    alpha_k and beta_k (central differences; the modes are read up to the truncation of the pack)
    :param pack: attenuation.pack.AttenuationPack with modes
    :return: dictionary of sup norms
    """
    step = pack.grid.step
    a = pack.a_on_grid()
    disk = np.abs(pack.grid.z) <= pack.grid.radius * (1.0 + 1e-12)
    report = dict()
    for name, coeffs, sign in (("alpha", pack.alpha, 1.0), ("beta", pack.beta, -1.0)):
        modes = pack.on_grid(coeffs)
        report[f"{name}_0"] = _sup(grid_dbar(modes[..., 0], step), disk)
        report[f"{name}_1"] = _sup(grid_dbar(modes[..., 1], step) - sign * a * modes[..., 0], disk)
        worst = 0.0
        for k in range(1, modes.shape[-1] - 1):
            res = grid_dbar(modes[..., k + 1], step) + grid_d(modes[..., k - 1], step) - sign * a * modes[..., k]
            worst = max(worst, _sup(res, disk))
        report[f"{name}_k"] = worst
    return report
