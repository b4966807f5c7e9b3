"""
Integrating factor of the attenuated transport equation
    h(z, theta) = Da(z, theta) - 1/2 (I - iH) Ra(z . theta_perp, theta),
with Da the divergence beam transform, Ra the Radon transform of the extended attenuation, H the classical Hilbert
transform in the first variable and theta_perp = (-sin phi, cos phi).

Per direction node, Da is tabulated on an (s, t) grid as the tail integral int_t^inf a_ext(s theta_perp + r theta) dr
(cumulative Simpson), Ra is the full line integral of the same table and H is applied as the Fourier multiplier
-i sign(frequency) on a zero padded grid, corrected for the periodization of the padded grid.
"""
import logging

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.ndimage import map_coordinates

from geometry.domain import direction
from tensoray_errors import ConfigError
from transport.xray import simpson_weights

logger = logging.getLogger(__name__)

# Minimal zero padding factor of the classical Hilbert transform
MIN_HILBERT_PADDING = 4


def fourier_hilbert(samples):
    """Periodic discrete Hilbert transform: multiplier -i sign(frequency) along the last axis (Nyquist dropped)"""
    samples = np.asarray(samples)
    n = samples.shape[-1]
    freq = np.fft.fftfreq(n)
    multiplier = -1j * np.sign(freq)
    if n % 2 == 0:
        multiplier[n // 2] = 0.0
    out = np.fft.ifft(np.fft.fft(samples, axis=-1) * multiplier, axis=-1)
    return out.real if np.isrealobj(samples) else out


def periodization_kernel(offsets, period):
    """(1/pi) (1/x - (pi/P) cot(pi x / P)): difference between the line kernel and the periodic kernel"""
    x = np.asarray(offsets, dtype=float)
    out = np.zeros_like(x)
    nz = x != 0
    y = np.pi * x[nz] / period
    out[nz] = (1.0 / x[nz] - (np.pi / period) / np.tan(y)) / np.pi
    return out


def classical_hilbert(samples, ds, padding=MIN_HILBERT_PADDING, line_correction=True):
    """
    Classical Hilbert transform Hf(s) = 1/pi PV int f(t) / (s - t) dt of compactly supported samples on a uniform grid
    :param samples: array (..., n) of samples on the grid s_k = s_0 + k ds, vanishing near both ends
    :param ds: grid spacing
    :param padding: zero padding factor (>= 4)
    :param line_correction: add the smooth correction turning the periodic transform of the padded grid into the
    transform on the line
    :return: array (..., n) of Hf on the same grid
    """
    if padding < MIN_HILBERT_PADDING:
        raise ConfigError(f"Attention, the classical Hilbert transform needs a zero padding factor >= "
                          f"{MIN_HILBERT_PADDING}, got {padding}.")
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    n_fft = int(padding) * n
    padded = np.zeros(samples.shape[:-1] + (n_fft,))
    padded[..., :n] = samples
    out = fourier_hilbert(padded)[..., :n]
    if line_correction:
        offsets = ds * (np.arange(n)[:, None] - np.arange(n)[None, :])
        kernel = periodization_kernel(offsets, n_fft * ds)
        out = out + ds * samples @ kernel.T
    return out


class LineTables:
    """
    Per-direction tables of the extended attenuation on the (s, t) grid s, t in [-R_c, R_c] (R_c the larger of the
    support radius of the extension and the extent of the evaluation points): tail integrals C(s, t) = int_t^{R_c} a_ext,
    the Radon transform Ra(s) = C(s, -R_c) and its classical Hilbert transform.
    """

    def __init__(self, attenuation, phi, ds, padding=MIN_HILBERT_PADDING, extent=0.0):
        if not ds > 0:
            raise ConfigError(f"Attention, the Radon grid spacing must be positive, got {ds}.")
        half = int(np.ceil(max(attenuation.support_radius, extent) / ds))
        self.ds = float(ds)
        self.grid = ds * np.arange(-half, half + 1)
        self.origin = self.grid[0]
        self.phi = float(phi)
        w = direction(phi)
        # points s theta_perp + t theta, indexed [s, t]
        pts = self.grid[:, None] * (1j * w) + self.grid[None, :] * w
        values = attenuation.extension(pts)
        forward = cumulative_simpson(values, dx=ds, axis=1, initial=0.0)
        self.radon = forward[:, -1].copy()
        self.tail = self.radon[:, None] - forward
        self.hilbert_radon = classical_hilbert(self.radon, ds, padding)
        self._radon_spline = CubicSpline(self.grid, self.radon)
        self._hilbert_spline = CubicSpline(self.grid, self.hilbert_radon)
        logger.debug(f"Line tables of direction phi = {self.phi:.4f} on {self.grid.size} x {self.grid.size} nodes.")

    def beam(self, z):
        """Da(z, theta) by cubic spline interpolation of the tail table"""
        w = direction(self.phi)
        s = np.real(z * np.conj(1j * w))
        t = np.real(z * np.conj(w))
        coords = np.stack([(s.ravel() - self.origin) / self.ds, (t.ravel() - self.origin) / self.ds])
        return map_coordinates(self.tail, coords, order=3, mode="nearest").reshape(np.shape(z))

    def h(self, z):
        """h(z, theta) for the direction of the table"""
        w = direction(self.phi)
        s = np.real(z * np.conj(1j * w))
        return self.beam(z) - 0.5 * self._radon_spline(s) + 0.5j * self._hilbert_spline(s)


def beam_transform(attenuation, z, phi, h_ray):
    """
    Divergence beam transform Da(z, theta) = int_0^inf a_ext(z + t theta) dt by composite Simpson up to the support edge
    of the extension (reference evaluation, vectorized over z and phi)
    """
    z, phi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(phi, dtype=float))
    w = direction(phi)
    rc = attenuation.support_radius
    proj = np.real(z * np.conj(w))
    length = np.maximum(-proj + np.sqrt(np.maximum(proj ** 2 - np.abs(z) ** 2 + rc ** 2, 0.0)), 0.0)
    intervals = max(2, 2 * int(np.ceil(np.max(length) / (2.0 * h_ray))))
    t = np.linspace(0.0, 1.0, intervals + 1)
    pts = z[..., None] + (length[..., None] * t) * w[..., None]
    vals = attenuation.extension(pts)
    return (vals @ simpson_weights(intervals)) * length / intervals


def radon(attenuation, s, phi, h_ray):
    """
    Radon transform Ra(s, theta) = int a_ext(s theta_perp + t theta) dt by composite Simpson over the chord of the
    support of the extension (reference evaluation, vectorized over s and phi)
    """
    s, phi = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(phi, dtype=float))
    w = direction(phi)
    half = np.sqrt(np.maximum(attenuation.support_radius ** 2 - s ** 2, 0.0))
    intervals = max(2, 2 * int(np.ceil(np.max(2 * half) / (2.0 * h_ray))))
    t = np.linspace(-1.0, 1.0, intervals + 1)
    pts = (s * 1j * w)[..., None] + (half[..., None] * t) * w[..., None]
    vals = attenuation.extension(pts)
    return (vals @ simpson_weights(intervals)) * 2 * half / intervals


def direct_h(attenuation, z, phi, ds, padding=MIN_HILBERT_PADDING):
    """
    Slow reference evaluation of h at (z, phi): beam transform by direct quadrature, Radon profile recomputed for the
    direction phi
    """
    tables = LineTables(attenuation, phi, ds, padding)
    w = direction(phi)
    s = np.real(np.asarray(z) * np.conj(1j * w))
    da = beam_transform(attenuation, z, phi, ds)
    return da - 0.5 * tables._radon_spline(s) + 0.5j * tables._hilbert_spline(s)
