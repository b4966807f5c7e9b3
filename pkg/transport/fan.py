import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from tqdm import tqdm

import constant_config
from geometry.domain import Domain, angle_grid, direction
from tensoray_errors import ConfigError, PreconditionError
from transport.xray import ray_integrals

logger = logging.getLogger(__name__)


class FanData:
    """
    Samples g(zeta_i, theta_j) of the (attenuated) X-ray transform on the boundary x direction grid. Entries on the
    inflow set and on the tangent band are zero.
    """

    def __init__(self, values, domain, attenuation_tag="none", metadata=None, check=True):
        """
        Constructor of the fan data
        :param values: real array (M, K)
        :param domain: geometry.domain.Domain providing the boundary grid
        :param attenuation_tag: label of the attenuation used to produce the data ('none' for the plain transform)
        :param metadata: dictionary of key-value pairs describing how the data was produced (echoed into the files)
        :param check: verify finiteness and the vanishing on the inflow set and tangent band
        """
        values = np.asarray(values)
        if np.iscomplexobj(values):
            if np.max(np.abs(values.imag), initial=0.0) > 0:
                raise PreconditionError("Attention, fan data must be real valued.")
            values = values.real
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != domain.boundary_nodes:
            raise ConfigError(f"Attention, fan data of shape {values.shape} does not match {domain.boundary_nodes} "
                              f"boundary nodes.")
        self.values = values
        self.domain = domain
        self.attenuation_tag = attenuation_tag
        self.metadata = dict(metadata) if metadata else dict()
        if check:
            if not np.all(np.isfinite(values)):
                raise PreconditionError("Attention, fan data contains non finite values.")
            if np.any(values[self.domain.ray_classes(self.K) <= 0] != 0.0):
                raise PreconditionError("Attention, fan data must vanish on the inflow set and on the tangent band.")

    @property
    def M(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[1]

    @property
    def phi(self):
        return angle_grid(self.K)

    def with_values(self, values, check=False):
        return FanData(values, self.domain, self.attenuation_tag, self.metadata, check=check)

    def header(self):
        return {"M": self.M, "K": self.K, "radius": self.domain.radius, "attenuation": self.attenuation_tag}


def make_fan(field, attenuation, domain, angle_nodes, h_ray=None, threads=None, show_progress=False):
    """
    Assemble fan data: (attenuated) X-ray transform on the outflow nodes, zero on the inflow nodes and on the tangent
    band. Rays are integrated in independent batches spread over a thread pool.
    :param field: fields.model.TensorField
    :param attenuation: fields.model.Attenuation or None
    :param domain: geometry.domain.Domain
    :param angle_nodes: number K of direction nodes (even)
    :param h_ray: ray quadrature step, default 1e-3 * radius
    :param threads: number of worker threads, default TENSORAY_THREADS
    :param show_progress: display a tqdm progress bar
    :return: FanData
    """
    if angle_nodes % 2 != 0 or angle_nodes < 2:
        raise ConfigError(f"Attention, the number of direction nodes must be even, got {angle_nodes}.")
    h_ray = h_ray or constant_config.DEFAULT_RAY_STEP_FRACTION * domain.radius
    threads = threads or constant_config.TENSORAY_THREADS

    classes = domain.ray_classes(angle_nodes)
    phi = angle_grid(angle_nodes)
    rows, cols = np.nonzero(classes > 0)
    z = domain.zeta[rows]
    ray_phi = phi[cols]
    tau = domain.exit_distance(z, -direction(ray_phi))

    values = np.zeros((domain.boundary_nodes, angle_nodes))
    # Group rays by boundary node: each group is an independent quadrature job
    jobs = [np.nonzero(rows == i)[0] for i in range(domain.boundary_nodes)]

    def run(idx):
        return idx, ray_integrals(field, attenuation, z[idx], ray_phi[idx], tau[idx], h_ray)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for idx, res in tqdm(pool.map(run, jobs), total=len(jobs), disable=not show_progress,
                             desc=f"Integrating {len(rows)} outflow rays..."):
            values[rows[idx], cols[idx]] = res

    tag = attenuation.name if attenuation is not None else "none"
    metadata = {"phantom": field.name, "h_ray": h_ray}
    logger.info(f"Assembled fan data of field '{field.name}' (attenuation: {tag}) on a {domain.boundary_nodes} x "
                f"{angle_nodes} grid.")
    return FanData(values, domain, attenuation_tag=tag, metadata=metadata)


def relative_fan_error(reference, candidate):
    """Sup norm of the difference of two fans on the outflow nodes relative to the sup norm of the reference"""
    scale = np.max(np.abs(reference.values))
    gap = np.max(np.abs(reference.values - candidate.values))
    return float(gap / scale) if scale > 0 else float(gap)


def domain_from_header(header, tangency_eps=constant_config.DEFAULT_TANGENCY_EPS):
    return Domain(radius=float(header["radius"]), boundary_nodes=int(header["M"]), tangency_eps=tangency_eps)
