import numpy as np

import constant_config
from tensoray_errors import ConfigError, DomainError

# Relative tolerance used to decide whether a point lies on the boundary circle
BOUNDARY_TOLERANCE = 1e-12


class BOUNDARY_SET:
    OUTFLOW = "gamma_plus"
    INFLOW = "gamma_minus"
    TANGENT = "gamma_zero"


def as_complex(x):
    """
    Convert a point (or an array of points) given as (x1, x2) pairs, or already as complex numbers, to complex form
    :param x: complex scalar / array, or real array whose last axis has length 2
    :return: complex scalar or array
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return x
    if x.shape[-1:] != (2,):
        raise DomainError(f"Attention, points must be complex numbers or (x1, x2) pairs, got shape {x.shape}.")
    return x[..., 0] + 1j * x[..., 1]


def direction(phi):
    """Unit vector (cos phi, sin phi) as a complex number"""
    return np.exp(1j * np.asarray(phi, dtype=float))


def angle_grid(angle_nodes):
    """Uniform direction grid phi_j = 2 pi j / K"""
    return 2.0 * np.pi * np.arange(angle_nodes) / angle_nodes


class Domain:
    """
    Disk of a given radius centered at the origin, with a uniform grid of M boundary nodes
    zeta(s_i) = radius * (cos s_i, sin s_i), s_i = 2 pi i / M, traversed counterclockwise. The outward normal at
    zeta(s) makes the angle eta(s) = s with the x1 axis.
    """

    def __init__(self, radius=constant_config.DEFAULT_RADIUS, boundary_nodes=constant_config.DEFAULT_BOUNDARY_NODES,
                 tangency_eps=constant_config.DEFAULT_TANGENCY_EPS):
        """
        Constructor of the disk domain
        :param radius: radius of the disk (positive)
        :param boundary_nodes: number M of uniform boundary nodes, even and >= 8 (the principal value rule of the
        boundary Hilbert transform skips every other node)
        :param tangency_eps: directions with |theta . n| <= tangency_eps are classified as tangent
        """
        if not radius > 0:
            raise ConfigError(f"Attention, the radius of the disk must be positive, got {radius}.")
        if int(boundary_nodes) != boundary_nodes or boundary_nodes < 8 or boundary_nodes % 2 != 0:
            raise ConfigError(f"Attention, the number of boundary nodes must be an even integer >= 8, "
                              f"got {boundary_nodes}.")
        if not tangency_eps >= 0:
            raise ConfigError(f"Attention, the tangency band must be non-negative, got {tangency_eps}.")

        self.radius = float(radius)
        self.boundary_nodes = int(boundary_nodes)
        self.tangency_eps = float(tangency_eps)

        # Boundary parameter, boundary nodes (complex) and outward normal angle
        self.s = 2.0 * np.pi * np.arange(self.boundary_nodes) / self.boundary_nodes
        self.zeta = self.radius * np.exp(1j * self.s)
        self.normal_angle = self.s.copy()

    @property
    def M(self):
        return self.boundary_nodes

    @property
    def ds(self):
        return 2.0 * np.pi / self.boundary_nodes

    def describe(self):
        return {"radius": self.radius, "boundary_nodes": self.boundary_nodes, "tangency_eps": self.tangency_eps}

    def check_in_disk(self, z):
        z = as_complex(z)
        if np.any(np.abs(z) > self.radius * (1.0 + BOUNDARY_TOLERANCE)):
            raise DomainError(f"Attention, found point(s) outside the closed disk of radius {self.radius}: "
                              f"max |x| = {np.max(np.abs(z))}.")
        return z

    def check_on_boundary(self, z):
        z = as_complex(z)
        if np.any(np.abs(np.abs(z) - self.radius) > BOUNDARY_TOLERANCE * self.radius):
            raise DomainError(f"Attention, found point(s) off the boundary circle of radius {self.radius}.")
        return z

    def exit_distance(self, x, theta):
        """
        Distance travelled from x in the direction theta before leaving the closed disk, i.e.
        sup{t >= 0 : x + t theta in the closed disk}. The chord length behind a point, tau(x, theta), is
        exit_distance(x, -theta).
        :param x: point(s) in the closed disk (complex or (x1, x2) pairs)
        :param theta: unit direction(s) (complex or (cos, sin) pairs), broadcastable against x
        :return: non-negative distance(s)
        """
        z = self.check_in_disk(x)
        w = as_complex(theta)
        proj = np.real(z * np.conj(w))
        disc = proj ** 2 - np.abs(z) ** 2 + self.radius ** 2
        return np.maximum(-proj + np.sqrt(np.maximum(disc, 0.0)), 0.0)

    def classify(self, x, theta):
        """
        Classify a boundary point - direction pair as outflow (theta . n > 0), inflow (theta . n < 0) or tangent
        :param x: boundary point
        :param theta: unit direction
        :return: one of BOUNDARY_SET
        """
        z = self.check_on_boundary(x)
        w = as_complex(theta)
        dot = np.real(w * np.conj(z)) / np.abs(z)
        if abs(dot) <= self.tangency_eps:
            return BOUNDARY_SET.TANGENT
        return BOUNDARY_SET.OUTFLOW if dot > 0 else BOUNDARY_SET.INFLOW

    def ray_classes(self, angle_nodes):
        """
        Classification of every (boundary node, direction node) pair of the uniform grids
        :param angle_nodes: number K of direction nodes
        :return: int array (M, K) with +1 on the outflow set, -1 on the inflow set and 0 on the tangent band
        """
        phi = angle_grid(angle_nodes)
        dot = np.cos(phi[None, :] - self.normal_angle[:, None])
        classes = np.sign(dot).astype(int)
        classes[np.abs(dot) <= self.tangency_eps] = 0
        return classes

    def boundary_derivative(self, values):
        """
        Tangential derivative d/dtau = (1/radius) d/ds of values sampled on the boundary nodes, computed by
        trigonometric interpolation (exact for trigonometric polynomials of degree < M/2). The Nyquist mode is
        dropped. Operates along the first axis.
        :param values: real or complex array whose first axis runs over the boundary nodes
        :return: complex array of the same shape
        """
        values = np.asarray(values)
        if values.shape[0] != self.boundary_nodes:
            raise DomainError(f"Attention, expected {self.boundary_nodes} boundary samples, got {values.shape[0]}.")
        freq = np.fft.fftfreq(self.boundary_nodes, d=1.0 / self.boundary_nodes)
        freq[self.boundary_nodes // 2] = 0.0
        multiplier = (1j * freq / self.radius).reshape((-1,) + (1,) * (values.ndim - 1))
        return np.fft.ifft(multiplier * np.fft.fft(values, axis=0), axis=0)

    def trig_interpolate(self, values, s, derivative=0):
        """
        Evaluate the trigonometric interpolant of boundary samples (or its derivative of the given order with respect
        to s) at arbitrary boundary parameters s
        :param values: array (M, ...) of samples on the boundary nodes
        :param s: array of boundary parameters
        :param derivative: order of the s-derivative
        :return: complex array s.shape + values.shape[1:]
        """
        values = np.asarray(values)
        m = self.boundary_nodes
        coeffs = np.fft.fft(values, axis=0) / m
        freq = np.fft.fftfreq(m, d=1.0 / m)
        # Split the Nyquist mode symmetrically so that real samples give a real interpolant
        coeffs = np.array(coeffs, dtype=complex)
        nyquist = coeffs[m // 2] / 2.0
        coeffs = np.concatenate([coeffs, nyquist[None]], axis=0)
        coeffs[m // 2] = nyquist
        freq = np.concatenate([freq, [m // 2]])
        if derivative:
            coeffs = coeffs * ((1j * freq) ** derivative).reshape((-1,) + (1,) * (coeffs.ndim - 1))
        phase = np.exp(1j * np.multiply.outer(np.asarray(s, dtype=float), freq))
        return np.tensordot(phase, coeffs, axes=(phase.ndim - 1, 0))
