import logging

import numpy as np

import constant_config
from geometry.domain import BOUNDARY_SET, as_complex, direction
from tensoray_errors import ConfigError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

# Number of rays integrated together (bounds the memory of a quadrature batch)
RAY_BATCH_SIZE = 256


def simpson_weights(intervals):
    """Composite Simpson weights (without the step factor) for an even number of intervals"""
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def ray_integrals(field, attenuation, z, phi, tau, h_ray):
    """
    Attenuated line integrals int_{-tau}^{0} <F(z + t theta) theta, theta> exp(-int_t^0 a(z + s theta) ds) dt for a
    batch of rays ending at z. The outer integral uses composite Simpson with step <= h_ray on nodes snapped to both
    chord ends; the attenuation exponent is the cumulative trapezoid on the same nodes.
    :param field: fields.model.TensorField
    :param attenuation: fields.model.Attenuation or None
    :param z: complex array of end points
    :param phi: array of direction angles (same shape as z)
    :param tau: array of backward chord lengths (same shape as z)
    :param h_ray: maximal quadrature step
    :return: real array of the same shape as z
    """
    if not h_ray > 0:
        raise ConfigError(f"Attention, the ray quadrature step must be positive, got {h_ray}.")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z, phi, tau = z.ravel(), np.broadcast_to(phi, shape).ravel(), np.broadcast_to(tau, shape).ravel()
    out = np.zeros(z.size)
    if z.size == 0 or np.max(tau) <= 0:
        return out.reshape(shape)

    intervals = max(2, 2 * int(np.ceil(np.max(tau) / (2.0 * h_ray))))
    weights = simpson_weights(intervals)
    fractions = np.linspace(-1.0, 0.0, intervals + 1)

    logger.debug(f"Integrating {z.size} rays on {intervals} Simpson intervals (step <= {h_ray}).")
    for start in range(0, z.size, RAY_BATCH_SIZE):
        sl = slice(start, start + RAY_BATCH_SIZE)
        step = tau[sl] / intervals
        t = tau[sl, None] * fractions[None, :]
        pts = z[sl, None] + t * direction(phi[sl])[:, None]
        integrand = field.source(pts, phi[sl, None])
        if attenuation is not None:
            a = attenuation(pts)
            # int_{t_k}^{0} a by the trapezoid rule, accumulated from the ray end backwards
            panels = 0.5 * (a[:, 1:] + a[:, :-1]) * step[:, None]
            exponent = np.zeros_like(a)
            exponent[:, :-1] = np.cumsum(panels[:, ::-1], axis=1)[:, ::-1]
            integrand = integrand * np.exp(-exponent)
        out[sl] = (integrand * weights[None, :]).sum(axis=1) * step
    return out.reshape(shape)


def xray(field, domain, x, phi, h_ray=None):
    """
    X-ray transform of a tensor field on the outflow set
    :param field: TensorField
    :param domain: geometry.domain.Domain
    :param x: boundary point
    :param phi: direction angle, (x, theta) must belong to the outflow set
    :param h_ray: quadrature step, default 1e-3 * radius
    :return: float
    """
    return att_xray(field, None, domain, x, phi, h_ray)


def att_xray(field, attenuation, domain, x, phi, h_ray=None):
    """
    Attenuated X-ray transform X_a F(x, theta) on the outflow set (attenuation None gives the plain transform)
    """
    h_ray = h_ray or constant_config.DEFAULT_RAY_STEP_FRACTION * domain.radius
    z = as_complex(x)
    theta = direction(phi)
    if domain.classify(z, theta) != BOUNDARY_SET.OUTFLOW:
        raise PreconditionError(f"Attention, the pair (x={z}, phi={phi}) does not belong to the outflow set.")
    tau = domain.exit_distance(z, -theta)
    return float(ray_integrals(field, attenuation, np.array([z]), np.array([phi]), np.array([tau]), h_ray)[0])


def transport_solution(field, attenuation, domain, x, phi, h_ray=None):
    """
    Solution u(x, theta) of theta . grad u + a u = <F theta, theta> with zero inflow trace, obtained by integrating along
    the characteristic from the inflow boundary. Vectorized over x and phi (broadcast together).
    :param field: TensorField
    :param attenuation: Attenuation or None
    :param domain: geometry.domain.Domain
    :param x: point(s) in the closed disk
    :param phi: direction angle(s)
    :param h_ray: quadrature step, default 1e-3 * radius
    :return: real array
    """
    h_ray = h_ray or constant_config.DEFAULT_RAY_STEP_FRACTION * domain.radius
    z = as_complex(x)
    if np.any(np.abs(z) > domain.radius * (1.0 + 1e-12)):
        raise DomainError("Attention, the transport solution is defined on the closed disk only.")
    z, phi = np.broadcast_arrays(z, np.asarray(phi, dtype=float))
    tau = domain.exit_distance(z, -direction(phi))
    return ray_integrals(field, attenuation, z, phi, tau, h_ray)
