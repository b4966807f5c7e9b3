import hashlib
import json
import logging
import os
import pickle
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

import constant_config
from aanalytic.differences import ORDERS, grid_derivative
from aanalytic.sequence_field import SequenceField
from attenuation.integrating_factor import LineTables
from geometry.domain import angle_grid
from tensoray_errors import ConfigError, FileFormatError, ResolutionError, ShapeError

logger = logging.getLogger(__name__)

# Version of the pickled pack layout, bumped whenever the stored fields change
PACK_FORMAT_VERSION = 2
# Derivatives of the modes entering the product rule of u = beta * v
DERIVATIVE_ORDERS = (ORDERS.VALUE, ORDERS.D, ORDERS.DBAR, ORDERS.DD, ORDERS.D_DBAR)


class AttenuationPack:
    """
    Integrating factor h(z, theta_j) of an attenuation on the cover nodes of an interior grid and on the boundary
    nodes, with the angular modes alpha_k, beta_k (k = 0..N) of e^{-h} and e^{+h}.
    Rows [0, P_int) of the point arrays are the cover nodes (in grid.z[grid.cover] order), the last M rows are the
    boundary nodes. The attenuation values a are those of the attenuation itself (not of its cut-off extension) on all
    the rows.
    """

    def __init__(self, grid, boundary_points, h, a_values, radon_step, padding, attenuation_name="attenuation",
                 attenuation_descriptor=None):
        h = np.asarray(h, dtype=complex)
        interior = int(np.count_nonzero(grid.cover))
        boundary_points = np.asarray(boundary_points, dtype=complex)
        if h.shape[0] != interior + boundary_points.size:
            raise ShapeError(f"Attention, integrating factor table with {h.shape[0]} rows does not match {interior} "
                             f"interior and {boundary_points.size} boundary points.")
        self.grid = grid
        self.boundary_points = boundary_points
        self.h = h
        self.a_values = np.asarray(a_values, dtype=float)
        self.radon_step = float(radon_step)
        self.padding = int(padding)
        self.attenuation_name = attenuation_name
        self.attenuation_descriptor = attenuation_descriptor
        self.alpha = None
        self.beta = None
        self.diagnostics = dict()

    @property
    def K(self):
        return self.h.shape[1]

    @property
    def phi(self):
        return angle_grid(self.K)

    @property
    def interior_count(self):
        return self.h.shape[0] - self.boundary_points.size

    @property
    def points(self):
        return np.concatenate([self.grid.z[self.grid.cover], self.boundary_points])

    @property
    def truncation(self):
        return None if self.alpha is None else self.alpha.shape[1] - 1

    def boundary_factor(self):
        """e^{-h(zeta_i, theta_j)} on the boundary x direction grid, (M, K)"""
        return np.exp(-self.h[self.interior_count:])

    def on_grid(self, values):
        """Scatter per-point interior values (P_int, ...) onto the grid (nx, ny, ...), nan outside the cover"""
        values = np.asarray(values)[:self.interior_count]
        out = np.full(self.grid.z.shape + values.shape[1:], np.nan, dtype=values.dtype)
        if np.iscomplexobj(out):
            out.fill(np.nan + 0j)
        out[self.grid.cover] = values
        return out

    def on_boundary(self, values):
        return np.asarray(values)[self.interior_count:]

    def a_on_grid(self):
        return self.on_grid(self.a_values)

    def mode_derivatives(self, coefficients, orders=DERIVATIVE_ORDERS):
        """
        Grid values and derivatives d^p dbar^q of per-point coefficients (alpha, beta or a) scattered on the cover,
        by central differences (second orders by the 3 x 3 stencil); finite on the nodes whose stencil stays in the
        cover, which include the support nodes
        :return: dictionary order -> array (nx, ny, ...)
        """
        values = np.asarray(self.on_grid(coefficients), dtype=complex)
        return {order: grid_derivative(values, self.grid.step, order) for order in orders}

    def describe(self):
        return {"attenuation": self.attenuation_name, "K": self.K, "N": self.truncation,
                "interior_points": self.interior_count, "boundary_points": int(self.boundary_points.size),
                "radon_step": self.radon_step, "padding": self.padding, **self.diagnostics}


def build_h(attenuation, grid, boundary_points, angle_nodes, radon_step=None, padding=None, threads=None,
            show_progress=False):
    """
    Assemble h on every (point, direction) node: one set of line tables per direction node, interpolated at all the
    points. Directions are processed in parallel.
    :param attenuation: fields.model.Attenuation
    :param grid: aanalytic.sequence_field.InteriorGrid, h is evaluated on its cover nodes
    :param boundary_points: complex boundary nodes (domain.zeta)
    :param angle_nodes: number K of direction nodes
    :param radon_step: spacing of the (s, t) tables, default radius / 256
    :param padding: zero padding factor of the classical Hilbert transform
    :param threads: number of worker threads, default TENSORAY_THREADS
    :param show_progress: display a tqdm progress bar
    :return: AttenuationPack without modes
    """
    radon_step = radon_step or constant_config.DEFAULT_RADON_STEP_FRACTION * attenuation.radius
    padding = padding or constant_config.DEFAULT_HILBERT_PADDING
    threads = threads or constant_config.TENSORAY_THREADS
    points = np.concatenate([grid.z[grid.cover], np.asarray(boundary_points, dtype=complex)])
    extent = float(np.max(np.abs(points)))
    phi = angle_grid(angle_nodes)
    h = np.zeros((points.size, angle_nodes), dtype=complex)

    def run(j):
        return j, LineTables(attenuation, phi[j], radon_step, padding, extent).h(points)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for j, column in tqdm(pool.map(run, range(angle_nodes)), total=angle_nodes, disable=not show_progress,
                              desc=f"Tabulating the integrating factor on {angle_nodes} directions..."):
            h[:, j] = column

    logger.info(f"Built the integrating factor of '{attenuation.name}' on {points.size} points x {angle_nodes} "
                f"directions (table step {radon_step}, padding {padding}).")
    return AttenuationPack(grid, boundary_points, h, attenuation(points), radon_step, padding,
                           attenuation_name=attenuation.name, attenuation_descriptor=attenuation.descriptor)


def convolution_gap(alpha, beta):
    """max over points and k <= N of |sum_{m=0}^{k} alpha_m beta_{k-m} - [k = 0]|"""
    n = alpha.shape[-1]
    gap = 0.0
    for k in range(n):
        conv = np.sum(alpha[..., :k + 1] * beta[..., k::-1], axis=-1)
        gap = max(gap, float(np.max(np.abs(conv - (1.0 if k == 0 else 0.0)))))
    return gap


def alpha_beta_modes(pack, truncation, tol_mass=constant_config.DEFAULT_TOL_DISCARDED_MASS):
    """
    Angular modes alpha_k, beta_k (k = 0..N) of e^{-h} and e^{+h} at every point of the pack, stored in the pack,
    together with the diagnostics: largest negative mode, discarded positive mass and the gap of the convolution
    identity alpha * beta = delta.
    :param pack: AttenuationPack
    :param truncation: N
    :param tol_mass: largest admissible discarded mass sum_{k > N} |alpha_k|
    :return: (alpha, beta) complex arrays (P, N + 1)
    """
    k = pack.K
    if k < 2 * truncation + 2:
        raise ConfigError(f"Attention, {k} direction nodes cannot resolve {truncation} modes (need K >= 2N + 2).")
    alpha_all = np.fft.fft(np.exp(-pack.h), axis=1) / k
    beta_all = np.fft.fft(np.exp(pack.h), axis=1) / k
    negative = np.abs(alpha_all[:, k // 2 + 1:])
    discarded = np.sum(np.abs(alpha_all[:, truncation + 1:k // 2 + 1]), axis=1)
    discarded_beta = np.sum(np.abs(beta_all[:, truncation + 1:k // 2 + 1]), axis=1)
    pack.alpha = alpha_all[:, :truncation + 1].copy()
    pack.beta = beta_all[:, :truncation + 1].copy()
    pack.diagnostics = {
        "negative_mode_max": float(np.max(negative, initial=0.0)),
        "discarded_mass_alpha": float(np.max(discarded, initial=0.0)),
        "discarded_mass_beta": float(np.max(discarded_beta, initial=0.0)),
        "convolution_gap": convolution_gap(pack.alpha, pack.beta),
        "product_gap": float(np.max(np.abs(np.exp(-pack.h) * np.exp(pack.h) - 1.0))),
    }
    logger.info(f"Modes of the integrating factor: {pack.diagnostics}")
    worst = max(pack.diagnostics["discarded_mass_alpha"], pack.diagnostics["discarded_mass_beta"])
    if worst > tol_mass:
        raise ResolutionError(f"Attention, the modes of e^(-h) beyond N={truncation} carry a mass {worst} above "
                              f"{tol_mass}: the attenuation is under-resolved, increase N and K.")
    return pack.alpha, pack.beta


def convolve_modes(seq, coefficients):
    """
    w_p = sum_{j=0}^{N} c_j seq_{p+j} along the last axis, truncated where the sequence runs out
    :param seq: complex array (..., L)
    :param coefficients: complex array (..., N + 1) broadcasting against seq
    :return: (w of shape (..., L), truncation loss max |seq_{L-1}| sum_{j>=1} |c_j|)
    """
    seq = np.asarray(seq, dtype=complex)
    coefficients = np.asarray(coefficients, dtype=complex)
    length = seq.shape[-1]
    out = np.zeros(np.broadcast_shapes(seq.shape[:-1], coefficients.shape[:-1]) + (length,), dtype=complex)
    for j in range(min(coefficients.shape[-1], length)):
        out[..., :length - j] += coefficients[..., j:j + 1] * seq[..., j:]
    with np.errstate(invalid="ignore"):
        tail = np.abs(seq[..., -1]) * np.sum(np.abs(coefficients[..., 1:]), axis=-1)
    finite = tail[np.isfinite(tail)]
    return out, float(np.max(finite, initial=0.0))


# Terms (order of the coefficients, order of the sequence, multiplicity) of the Leibniz rule for d^p dbar^q (c * v)
LEIBNIZ_TERMS = {
    ORDERS.D: ((ORDERS.D, ORDERS.VALUE, 1.0), (ORDERS.VALUE, ORDERS.D, 1.0)),
    ORDERS.DBAR: ((ORDERS.DBAR, ORDERS.VALUE, 1.0), (ORDERS.VALUE, ORDERS.DBAR, 1.0)),
    ORDERS.DD: ((ORDERS.DD, ORDERS.VALUE, 1.0), (ORDERS.D, ORDERS.D, 2.0), (ORDERS.VALUE, ORDERS.DD, 1.0)),
    ORDERS.D_DBAR: ((ORDERS.D_DBAR, ORDERS.VALUE, 1.0), (ORDERS.D, ORDERS.DBAR, 1.0), (ORDERS.DBAR, ORDERS.D, 1.0),
                    (ORDERS.VALUE, ORDERS.D_DBAR, 1.0)),
}


def _convolve_field(seq, pack, coefficients):
    """
    Convolution of a SequenceField with per-point coefficients; the derivatives stored in the field are carried to the
    result by the Leibniz rule, the derivatives of the coefficients being grid differences on the cover
    """
    if not isinstance(seq, SequenceField):
        return convolve_modes(seq, coefficients)
    carried = [order for order, terms in LEIBNIZ_TERMS.items()
               if all(seq.has_derivative(seq_order) for _, seq_order, _ in terms)]
    if not carried:
        out, loss = convolve_modes(seq.values, pack.on_grid(coefficients))
        return SequenceField(seq.grid, out), loss
    coefficient_derivatives = pack.mode_derivatives(coefficients)
    out, loss = convolve_modes(seq.values, coefficient_derivatives[ORDERS.VALUE])
    derivatives = dict()
    for order in carried:
        total = np.zeros(seq.values.shape, dtype=complex)
        for coefficient_order, seq_order, multiplicity in LEIBNIZ_TERMS[order]:
            term, _ = convolve_modes(seq.derivative(seq_order), coefficient_derivatives[coefficient_order])
            total = total + multiplicity * term
        derivatives[order] = total
    logger.debug(f"Convolved a sequence field of length {seq.length} carrying the derivatives {carried}.")
    return SequenceField(seq.grid, out, derivatives), loss


def u_from_v(vseq, pack):
    """
    u_n = sum_j beta_j v_{n-j} on the sequences <v_{-2}, v_{-3}, ...> -> <u_{-2}, u_{-3}, ...>
    :param vseq: SequenceField on the grid of the pack, or an array (P, L) aligned with the pack points
    :param pack: AttenuationPack with modes
    :return: (same type as vseq, truncation loss)
    """
    if pack.beta is None:
        raise ConfigError("Attention, the attenuation pack has no modes, run alpha_beta_modes first.")
    return _convolve_field(vseq, pack, pack.beta)


def v_from_u(useq, pack):
    """v_n = sum_j alpha_j u_{n-j}, inverse of u_from_v up to the truncation"""
    if pack.alpha is None:
        raise ConfigError("Attention, the attenuation pack has no modes, run alpha_beta_modes first.")
    return _convolve_field(useq, pack, pack.alpha)


def build_pack(attenuation, grid, domain, angle_nodes, truncation, radon_step=None, padding=None,
               tol_mass=constant_config.DEFAULT_TOL_DISCARDED_MASS, threads=None, show_progress=False):
    """build_h followed by alpha_beta_modes"""
    pack = build_h(attenuation, grid, domain.zeta, angle_nodes, radon_step, padding, threads, show_progress)
    alpha_beta_modes(pack, truncation, tol_mass)
    return pack


def pack_cache_key(config_dict):
    """md5 of the sorted JSON dump of the parameters that determine a pack"""
    return hashlib.md5(json.dumps(config_dict, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def save_pack(pack, file_path):
    """Pickle the pack arrays under a versioned layout (written to a temporary file then renamed)"""
    payload = {
        "format_version": PACK_FORMAT_VERSION,
        "grid": {"radius": pack.grid.radius, "step": pack.grid.step, "margin": pack.grid.margin,
                 "axis": pack.grid.axis, "support_rings": pack.grid.support_rings,
                 "cover_rings": pack.grid.cover_rings},
        "boundary_points": pack.boundary_points,
        "h": pack.h,
        "a_values": pack.a_values,
        "radon_step": pack.radon_step,
        "padding": pack.padding,
        "attenuation_name": pack.attenuation_name,
        "attenuation_descriptor": pack.attenuation_descriptor,
        "alpha": pack.alpha,
        "beta": pack.beta,
        "diagnostics": pack.diagnostics,
    }
    folder = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(folder, exist_ok=True)
    tmp_path = file_path + ".tmp"
    with open(tmp_path, "wb") as f:
        pickle.dump(payload, f)
    os.replace(tmp_path, file_path)


def load_pack(file_path, grid):
    """
    Load a pickled pack and attach it to grid
    :param file_path: path of the pickle
    :param grid: InteriorGrid the pack must have been built on
    :return: AttenuationPack
    """
    try:
        with open(file_path, "rb") as f:
            payload = pickle.load(f)
    except (pickle.UnpicklingError, EOFError) as e:
        raise FileFormatError(f"Attention, cannot unpickle the attenuation pack {file_path}: {e}")
    if not isinstance(payload, dict) or payload.get("format_version") != PACK_FORMAT_VERSION:
        raise FileFormatError(f"Attention, attenuation pack {file_path} has an unsupported format version.")
    stored = payload["grid"]
    if stored["axis"].shape != grid.axis.shape or not np.allclose(stored["axis"], grid.axis) \
            or stored["margin"] != grid.margin or stored["cover_rings"] != grid.cover_rings:
        raise ShapeError(f"Attention, attenuation pack {file_path} was built on another interior grid.")
    pack = AttenuationPack(grid, payload["boundary_points"], payload["h"], payload["a_values"],
                           payload["radon_step"], payload["padding"], payload["attenuation_name"],
                           payload["attenuation_descriptor"])
    pack.alpha = payload["alpha"]
    pack.beta = payload["beta"]
    pack.diagnostics = payload["diagnostics"]
    return pack


def load_or_build_pack(attenuation, grid, domain, angle_nodes, truncation, radon_step=None, padding=None,
                       tol_mass=constant_config.DEFAULT_TOL_DISCARDED_MASS, cache_folder=None, threads=None,
                       show_progress=False):
    """
    Return the cached pack for these parameters when available, otherwise build it and save it to the cache
    :param cache_folder: folder of the pickles, default ATTENUATION_PACK_CACHE_FOLDER_PATH; caching is disabled when
    the attenuation has no descriptor
    """
    if attenuation.descriptor is None:
        return build_pack(attenuation, grid, domain, angle_nodes, truncation, radon_step, padding, tol_mass, threads,
                          show_progress)
    cache_folder = cache_folder or constant_config.ATTENUATION_PACK_CACHE_FOLDER_PATH
    key = pack_cache_key({"attenuation": attenuation.descriptor, "cutoff": attenuation.cutoff_width,
                          "radius": domain.radius, "M": domain.boundary_nodes, "K": angle_nodes, "N": truncation,
                          "grid": grid.describe(), "radon_step": radon_step, "padding": padding,
                          "version": PACK_FORMAT_VERSION})
    file_path = os.path.join(cache_folder, f"pack_{key}.pkl")
    if os.path.exists(file_path):
        print(f"Loading cached attenuation pack {file_path}...")
        return load_pack(file_path, grid)
    pack = build_pack(attenuation, grid, domain, angle_nodes, truncation, radon_step, padding, tol_mass, threads,
                      show_progress)
    save_pack(pack, file_path)
    print(f"Attenuation pack stored to {file_path}")
    return pack
