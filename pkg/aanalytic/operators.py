"""
Operators on boundary sequences of L-analytic maps: left shift, Bukhgeim-Cauchy integral and its derivatives, boundary
Hilbert transform and the range residual (I + iH) g.

On the circle zeta(s) = radius e^{is} the Cauchy kernels reduce to
    d zeta / (zeta - xi) = (cot((s - s0) / 2) + i) / 2 ds,
    d zeta / (zeta - xi) - d conj(zeta) / conj(zeta - xi) = i ds,
    conj(zeta - xi) / (zeta - xi) = -e^{-i(s + s0)},
so that only the first component carries a principal value integral. It is evaluated by the alternating-point
trapezoid rule (nodes at odd offsets from xi), exact for trigonometric polynomials of degree < M/2.

The interior integrals use the trapezoid rule, whose error near a pole at distance d from the circle behaves like
exp(-M d / radius). Points close to the boundary are integrated on the trigonometric interpolant of the data
resampled on 2^k M nodes.
"""
import logging

import numpy as np

from aanalytic.differences import ORDERS
from modes.sequences import BoundarySeq
from tensoray_errors import ConfigError, MarginError

logger = logging.getLogger(__name__)

# Product M_eff * distance / radius the boundary quadrature must reach at every evaluation point
REFINEMENT_TARGET = 48.0
# Largest resampling factor of the boundary nodes
MAX_REFINEMENT = 64
# Number of (evaluation point, quadrature node) pairs processed together by the Bukhgeim-Cauchy sweep
CAUCHY_BATCH_BUDGET = 1 << 16


def shift_left(seq):
    """
    Left shift L<u_{-1}, u_{-2}, ...> = <u_{-2}, u_{-3}, ...> along the last axis
    :param seq: array (..., L) with L >= 2, or BoundarySeq
    :return: array (..., L - 1) or BoundarySeq
    """
    if isinstance(seq, BoundarySeq):
        return BoundarySeq(shift_left(seq.components), seq.role)
    seq = np.asarray(seq)
    if seq.shape[-1] < 2:
        raise ConfigError("Attention, the left shift needs a sequence with at least two components.")
    return seq[..., 1:]


def check_margin(z, domain, margin):
    if np.any(np.abs(z) > domain.radius - margin + 1e-12 * domain.radius):
        raise MarginError(f"Attention, Bukhgeim-Cauchy evaluation points must satisfy |z| <= radius - margin "
                          f"= {domain.radius - margin}, got max |z| = {np.max(np.abs(z))}.")


def upsample(values, factor):
    """
    Trigonometric interpolant of samples on M uniform nodes evaluated on factor * M uniform nodes, along the first axis
    (the Nyquist mode is split evenly between +M/2 and -M/2)
    """
    values = np.asarray(values, dtype=complex)
    if factor == 1:
        return values
    m = values.shape[0]
    n = m * factor
    half = m // 2
    coeffs = np.fft.fft(values, axis=0)
    padded = np.zeros((n,) + values.shape[1:], dtype=complex)
    padded[:half] = coeffs[:half]
    padded[n - half + 1:] = coeffs[half + 1:]
    padded[half] = 0.5 * coeffs[half]
    padded[n - half] = 0.5 * coeffs[half]
    return np.fft.ifft(padded, axis=0) * factor


def refinement_factors(domain, z):
    """Power of two resampling factor of the boundary nodes needed at each evaluation point"""
    distance = np.maximum(domain.radius - np.abs(np.asarray(z)), 1e-300)
    need = REFINEMENT_TARGET * domain.radius / (domain.boundary_nodes * distance)
    exponent = np.clip(np.ceil(np.log2(np.maximum(need, 1.0))), 0, np.log2(MAX_REFINEMENT))
    return (2 ** exponent).astype(int)


def kernel_coefficients(length, order):
    """
    c_j (j = 0..length-1) of d^p dbar^q [conj(w)^j / w^{j+1}] = c_j conj(w)^{j-q} / w^{j+1+p}, w = zeta - z:
    c_j = (-1)^q j! / (j-q)! (j+1)...(j+p), zero for j < q
    """
    p, q = order
    j = np.arange(length, dtype=float)
    c = np.ones(length)
    for k in range(q):
        c = c * (j - k)
    for k in range(1, p + 1):
        c = c * (j + k)
    return (-1.0) ** q * c


def _cauchy_sweep(g, zeta, z, orders, weight):
    """Trapezoid sums of the kernel derivatives for a batch of points z on the nodes zeta; dict order -> (P, L)"""
    length = g.shape[1]
    d = zeta[None, :] - z[:, None]
    ratio = np.exp(-2j * np.angle(d))
    powers = np.ones(d.shape + (length,), dtype=complex)
    for j in range(1, length):
        powers[..., j] = powers[..., j - 1] * ratio
    out = dict()
    for order in orders:
        p, q = order
        c = kernel_coefficients(length, order)
        scale = weight / d ** (1 + p + q)
        res = np.zeros((z.size, length), dtype=complex)
        for n0 in range(length):
            # terms j = q..length-1-n0 carry conj(w)^{j-q} and the components g_{-n0-j}, g_{-n0-j-1}
            span = length - n0 - q
            if span <= 0:
                continue
            t1 = np.einsum("pmj,mj->pm", powers[..., :span], c[q:q + span] * g[:, n0 + q:])
            integrand = zeta[None, :] * t1
            if span > 1:
                t2 = np.einsum("pmj,mj->pm", powers[..., :span - 1], c[q:q + span - 1] * g[:, n0 + q + 1:])
                integrand = integrand + np.conj(zeta)[None, :] * t2
            res[:, n0] = np.sum(integrand * scale, axis=1)
        out[order] = res
    return out


def bukhgeim_cauchy_derivatives(bseq, domain, z, margin, orders=(ORDERS.VALUE,)):
    """
    Bukhgeim-Cauchy operator
        (Bg)_{-n}(z) = 1/(2 pi i) sum_{j>=0} int g_{-n-j}(zeta) conj(zeta - z)^j / (zeta - z)^{j+1} d zeta
                     - 1/(2 pi i) sum_{j>=1} int g_{-n-j}(zeta) conj(zeta - z)^{j-1} / (zeta - z)^j d conj(zeta)
    and its derivatives d^p dbar^q, obtained by differentiating the kernels under the integral. The j-sums are
    truncated at the available sequence length; the ratio conj(zeta - z) / (zeta - z) is evaluated as the unit phase
    e^{-2i arg(zeta - z)}. Each point is integrated on M * refinement_factors(domain, z) resampled boundary nodes.
    :param bseq: modes.sequences.BoundarySeq on the boundary nodes of domain
    :param domain: geometry.domain.Domain
    :param z: complex array of interior evaluation points
    :param margin: minimal distance of the evaluation points from the boundary
    :param orders: derivative orders (p, q), see aanalytic.differences.ORDERS
    :return: dictionary order -> complex array z.shape + (L,) with the components <(Bg)_{-1}, ..., (Bg)_{-L}>
    """
    z = np.asarray(z, dtype=complex)
    check_margin(z, domain, margin)
    orders = tuple(orders)
    g = bseq.components
    length = g.shape[1]
    flat = z.ravel()
    out = {order: np.zeros((flat.size, length), dtype=complex) for order in orders}
    factors = refinement_factors(domain, flat) if flat.size else np.zeros(0, dtype=int)

    for factor in np.unique(factors):
        nodes = domain.boundary_nodes * int(factor)
        zeta = domain.radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        fine = upsample(g, int(factor))
        selected = np.flatnonzero(factors == factor)
        batch = max(1, CAUCHY_BATCH_BUDGET // nodes)
        for start in range(0, selected.size, batch):
            idx = selected[start:start + batch]
            swept = _cauchy_sweep(fine, zeta, flat[idx], orders, 1.0 / nodes)
            for order in orders:
                out[order][idx] = swept[order]
        logger.debug(f"Bukhgeim-Cauchy integrals of {bseq.role} at {selected.size} points on {nodes} nodes.")
    return {order: values.reshape(z.shape + (length,)) for order, values in out.items()}


def bukhgeim_cauchy(bseq, domain, z, margin, order=ORDERS.VALUE):
    """
    Bukhgeim-Cauchy extension of a boundary sequence (or one of its derivatives) at interior points, see
    bukhgeim_cauchy_derivatives
    :return: complex array z.shape + (L,)
    """
    return bukhgeim_cauchy_derivatives(bseq, domain, z, margin, (order,))[order]


def principal_value_matrix(boundary_nodes):
    """
    Matrix of the alternating-point rule for (1 / 2pi) PV int g(s) cot((s - s_i) / 2) ds on M uniform nodes
    """
    if boundary_nodes % 2 != 0:
        raise ConfigError(f"Attention, the principal value rule needs an even number of boundary nodes, got "
                          f"{boundary_nodes}.")
    offsets = (np.arange(boundary_nodes)[None, :] - np.arange(boundary_nodes)[:, None]) % boundary_nodes
    h = 2.0 * np.pi / boundary_nodes
    matrix = np.zeros((boundary_nodes, boundary_nodes))
    odd = offsets % 2 == 1
    matrix[odd] = (2.0 * h / (2.0 * np.pi)) / np.tan(offsets[odd] * h / 2.0)
    return matrix


def hilbert_transform(bseq, domain):
    """
    Hilbert transform of a boundary sequence at every boundary node
        (Hg)_{-n}(xi) = 1/pi PV int g_{-n}(zeta) / (zeta - xi) d zeta
                      + 1/pi int {d zeta / (zeta - xi) - d conj(zeta) / conj(zeta - xi)} sum_{j>=1} g_{-n-j}(zeta)
                        (conj(zeta - xi) / (zeta - xi))^j
    :param bseq: BoundarySeq on the boundary nodes of domain
    :param domain: geometry.domain.Domain (M even)
    :return: complex array (M, L)
    """
    g = bseq.components
    m, length = g.shape
    if m != domain.boundary_nodes:
        raise ConfigError(f"Attention, boundary sequence sampled on {m} nodes, domain has {domain.boundary_nodes}.")
    pv = principal_value_matrix(m)
    out = pv @ g + (1j / m) * np.sum(g, axis=0)[None, :]
    s = domain.s
    for j in range(1, length):
        phase = (-1.0) ** j * np.exp(-1j * j * s)
        # sum_k phase_k g_{-n-j}(s_k) for every n with n + j inside the sequence
        moments = phase @ g[:, j:]
        out[:, :length - j] += (2j / m) * np.exp(-1j * j * s)[:, None] * moments[None, :]
    return out


def hilbert(bseq, domain, xi_index):
    """Hilbert transform of a boundary sequence at the boundary node xi_index; complex array (L,)"""
    return hilbert_transform(bseq, domain)[xi_index]


def range_residual(bseq, domain):
    """
    Residual (I + iH) g of the range condition of L-analytic boundary values
    :param bseq: BoundarySeq
    :param domain: geometry.domain.Domain
    :return: dictionary with the full residual field (M, L), its sup norm and the per-component sup norms
    """
    residual = bseq.components + 1j * hilbert_transform(bseq, domain)
    mags = np.abs(residual)
    logger.debug(f"Range residual of {bseq.role}: sup {float(np.max(mags)) if mags.size else 0.0:.3e}")
    return {
        "role": bseq.role,
        "residual": residual,
        "sup": float(np.max(mags)) if mags.size else 0.0,
        "per_component": [float(v) for v in np.max(mags, axis=0)] if mags.size else list(),
    }
