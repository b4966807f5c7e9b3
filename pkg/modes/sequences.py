import logging

import numpy as np

from tensoray_errors import ConfigError, ShapeError
from transport.fan import FanData

logger = logging.getLogger(__name__)


class PROVENANCE:
    PLAIN = "g"
    ODD_EXTENDED = "g_tilde"
    ATTENUATED = "gamma"


class ROLES:
    EVEN = "g_even"
    ODD = "g_odd"
    GTILDE_ODD = "g_tilde_odd"
    G_H = "g_h"
    G_H_EVEN = "g_h_even"
    G_H_ODD = "g_h_odd"
    GENERIC = "generic"


class ModeSequences:
    """
    Angular Fourier modes g_n(zeta_i), n = -N..N, of boundary data g(zeta_i, theta) = sum_n g_n(zeta_i) e^{i n phi}
    """

    def __init__(self, coefficients, truncation, provenance=PROVENANCE.PLAIN):
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.ndim != 2 or coefficients.shape[1] != 2 * truncation + 1:
            raise ShapeError(f"Attention, mode array of shape {coefficients.shape} does not match the truncation "
                             f"N={truncation}.")
        self.coefficients = coefficients
        self.truncation = int(truncation)
        self.provenance = provenance

    @property
    def M(self):
        return self.coefficients.shape[0]

    def mode(self, n):
        """Mode g_n on every boundary node (zero outside the truncation)"""
        if abs(n) > self.truncation:
            return np.zeros(self.M, dtype=complex)
        return self.coefficients[:, n + self.truncation]

    def conjugate_symmetry_gap(self):
        """max |g_{-n} - conj(g_n)|, zero for the modes of real data"""
        return float(np.max(np.abs(self.coefficients - np.conj(self.coefficients[:, ::-1]))))

    def synthesize(self, angle_nodes):
        """Evaluate sum_{|n|<=N} g_n e^{i n phi_j} on the uniform direction grid; returns (M, K) complex"""
        phi = 2.0 * np.pi * np.arange(angle_nodes) / angle_nodes
        n = np.arange(-self.truncation, self.truncation + 1)
        return self.coefficients @ np.exp(1j * np.outer(n, phi))

    def tail_magnitude(self):
        """max over the boundary of |g_{-N}|, to judge the truncation error"""
        return float(np.max(np.abs(self.mode(-self.truncation))))


class BoundarySeq:
    """
    Boundary sequence <c_{-1}, c_{-2}, ...> (relabelled so that the first stored component plays the role of the -1
    component in the Bukhgeim-Cauchy and Hilbert operators) on every boundary node
    """

    def __init__(self, components, role=ROLES.GENERIC):
        components = np.asarray(components, dtype=complex)
        if components.ndim != 2:
            raise ShapeError(f"Attention, a boundary sequence must be an (M, L) array, got shape {components.shape}.")
        self.components = components
        self.role = role

    @property
    def M(self):
        return self.components.shape[0]

    @property
    def length(self):
        return self.components.shape[1]

    def diagnostics(self, boundary_points=None, alpha=0.75):
        """
        Finite-grid diagnostics of the decay / regularity of the sequence: the l^{1,1} and l^{1,2} sums
        sup_zeta sum_j j^k |c_{-j}|, a Y_alpha seminorm estimate over neighboring boundary nodes, and the tail
        magnitude. Reported only, never enforced.
        """
        j = np.arange(1, self.length + 1)
        mags = np.abs(self.components)
        report = {
            "role": self.role,
            "length": int(self.length),
            "l11": float(np.max(mags @ j)) if self.length else 0.0,
            "l12": float(np.max(mags @ (j ** 2))) if self.length else 0.0,
            "tail": float(np.max(mags[:, -1])) if self.length else 0.0,
        }
        if boundary_points is not None and self.length:
            gap = np.abs(self.components - np.roll(self.components, -1, axis=0)) @ j
            dist = np.abs(boundary_points - np.roll(boundary_points, -1))
            report["y_alpha_estimate"] = float(np.max(gap / dist ** alpha))
        return report


def angular_modes(fan, truncation, provenance=PROVENANCE.PLAIN):
    """
    Angular Fourier analysis of fan data per boundary node, normalized so that g = sum_n g_n e^{i n phi}
    :param fan: transport.fan.FanData (or an (M, K) array)
    :param truncation: N, modes |n| > N are discarded
    :param provenance: one of PROVENANCE
    :return: ModeSequences
    """
    values = fan.values if isinstance(fan, FanData) else np.asarray(fan)
    k = values.shape[1]
    if k < 2 * truncation + 2:
        raise ConfigError(f"Attention, {k} direction nodes cannot resolve {truncation} modes (need K >= 2N + 2).")
    spectrum = np.fft.fft(values, axis=1) / k
    idx = np.arange(-truncation, truncation + 1) % k
    logger.debug(f"Angular modes |n| <= {truncation} of {values.shape[0]} x {k} fan samples ({provenance}).")
    return ModeSequences(spectrum[:, idx], truncation, provenance)


def build_even(ms):
    """g^even = <g_0, g_{-2}, g_{-4}, ...>"""
    if ms.truncation < 4:
        raise ConfigError(f"Attention, the mode truncation must be at least 4, got {ms.truncation}.")
    comps = [ms.mode(-n) for n in range(0, ms.truncation + 1, 2)]
    return BoundarySeq(np.stack(comps, axis=1), ROLES.EVEN)


def build_odd(ms, role=ROLES.ODD):
    """g^odd = <g_{-3}, g_{-5}, ...>; the mode g_{-1} is excluded"""
    if ms.truncation < 4:
        raise ConfigError(f"Attention, the mode truncation must be at least 4, got {ms.truncation}.")
    comps = [ms.mode(-n) for n in range(3, ms.truncation + 1, 2)]
    return BoundarySeq(np.stack(comps, axis=1), role)


def odd_extension(fan):
    """
    Odd extension g~(z, theta) = (g(z, theta) - g(z, -theta)) / 2 on the grid, zero on the tangent band. The direction
    -theta_j is the grid direction theta_{j + K/2}.
    :param fan: FanData vanishing on the inflow set and the tangent band
    :return: FanData (not vanishing on the inflow set)
    """
    if fan.K % 2 != 0:
        raise ConfigError(f"Attention, the odd extension requires an even number of directions, got {fan.K}.")
    opposite = np.roll(fan.values, -fan.K // 2, axis=1)
    values = 0.5 * (fan.values - opposite)
    values[fan.domain.ray_classes(fan.K) == 0] = 0.0
    return fan.with_values(values, check=False)


def gtilde_seq(fan, truncation):
    """<g~_{-3}, g~_{-5}, ...> built from the odd modes of the odd extension"""
    ms = angular_modes(odd_extension(fan), truncation, PROVENANCE.ODD_EXTENDED)
    return build_odd(ms, ROLES.GTILDE_ODD)


def attenuated_data_modes(fan, boundary_factor, truncation):
    """
    Modes gamma_k of e^{-h} g on the boundary and the sequences consumed by the attenuated range conditions
    :param fan: FanData
    :param boundary_factor: complex array (M, K) of e^{-h(zeta_i, theta_j)} (see attenuation.pack)
    :param truncation: N
    :return: (gamma ModeSequences, g_h = <gamma_{-2}, gamma_{-3}, ...>, g_h^even = <gamma_{-2}, gamma_{-4}, ...>,
    g_h^odd = <gamma_{-3}, gamma_{-5}, ...>); gamma_{-1} enters none of them
    """
    boundary_factor = np.asarray(boundary_factor)
    if boundary_factor.shape != fan.values.shape:
        raise ShapeError(f"Attention, integrating factor of shape {boundary_factor.shape} does not match fan data "
                         f"of shape {fan.values.shape}.")
    gamma = angular_modes(fan.values * boundary_factor, truncation, PROVENANCE.ATTENUATED)
    g_h = BoundarySeq(np.stack([gamma.mode(-n) for n in range(2, truncation + 1)], axis=1), ROLES.G_H)
    g_h_even = BoundarySeq(np.stack([gamma.mode(-n) for n in range(2, truncation + 1, 2)], axis=1), ROLES.G_H_EVEN)
    g_h_odd = BoundarySeq(np.stack([gamma.mode(-n) for n in range(3, truncation + 1, 2)], axis=1), ROLES.G_H_ODD)
    return gamma, g_h, g_h_even, g_h_odd
