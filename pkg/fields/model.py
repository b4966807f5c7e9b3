import logging

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from geometry.domain import as_complex
from tensoray_errors import ConfigError, PreconditionError, ShapeError

logger = logging.getLogger(__name__)


def smooth_cutoff(r, inner_radius, width):
    """
    C-infinity radial cutoff equal to 1 for r <= inner_radius and to 0 for r >= inner_radius + width
    :param r: radii (array)
    :param inner_radius: radius up to which the cutoff is 1
    :param width: width of the transition band
    :return: array of the same shape as r
    """
    t = np.clip((inner_radius + width - np.asarray(r, dtype=float)) / width, 0.0, 1.0)

    def bump(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    num = bump(t)
    return num / (num + bump(1.0 - t))


class TensorField:
    """
    Real symmetric 2-tensor field on the closed disk. Symmetry is structural: only f11, f12, f22 are stored.
    """

    def __init__(self, components, support_margin=0.0, name="tensor", descriptor=None, compact=False):
        """
        Constructor of the tensor field
        :param components: callable mapping complex points z (array) to the tuple (f11, f12, f22) of real arrays
        :param support_margin: distance from the boundary circle within which all the components vanish
        :param name: label used in logs and file metadata
        :param descriptor: JSON-serializable description of the field (phantoms), None for derived fields
        :param compact: True if the field is tagged as compactly supported in |x| <= radius - support_margin
        """
        if not callable(components):
            raise ConfigError("Attention, the components of a tensor field must be given as a callable.")
        self._components = components
        self.support_margin = float(support_margin)
        self.name = name
        self.descriptor = descriptor
        self.compact = compact

    def evaluate(self, z):
        z = as_complex(z)
        f11, f12, f22 = self._components(z)
        shape = np.shape(z)
        return (np.broadcast_to(np.asarray(f11, dtype=float), shape),
                np.broadcast_to(np.asarray(f12, dtype=float), shape),
                np.broadcast_to(np.asarray(f22, dtype=float), shape))

    def decompose(self, z):
        return decompose_components(*self.evaluate(z))

    def source(self, z, phi):
        """Quadratic form <F(z) theta, theta> for theta = (cos phi, sin phi), computed as theta^T F theta"""
        f11, f12, f22 = self.evaluate(z)
        c, s = np.cos(phi), np.sin(phi)
        return f11 * c * c + 2.0 * f12 * c * s + f22 * s * s

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, other)])

    def scaled(self, factor):
        return linear_combination([(factor, self)])


def linear_combination(terms, name="combination"):
    """
    Tensor field sum_k c_k F_k
    :param terms: list of (coefficient, TensorField) pairs
    :param name: label of the resulting field
    :return: TensorField
    """
    terms = list(terms)

    def components(z):
        acc = [np.zeros(np.shape(z)), np.zeros(np.shape(z)), np.zeros(np.shape(z))]
        for coef, field in terms:
            for k, comp in enumerate(field.evaluate(z)):
                acc[k] = acc[k] + coef * comp
        return tuple(acc)

    margin = min((field.support_margin for _, field in terms), default=0.0)
    return TensorField(components, support_margin=margin, name=name,
                       compact=all(field.compact for _, field in terms))


class GriddedTensorField(TensorField):
    """
    Tensor field sampled on a Cartesian grid and evaluated by bilinear interpolation (zero outside the grid)
    """

    def __init__(self, x_axis, y_axis, f11, f12, f22, name="gridded_tensor"):
        f11, f12, f22 = (np.asarray(c, dtype=float) for c in (f11, f12, f22))
        expected = (len(x_axis), len(y_axis))
        for comp in (f11, f12, f22):
            if comp.shape != expected:
                raise ShapeError(f"Attention, tensor components of shape {comp.shape} do not match the grid "
                                 f"{expected}.")
        self.x_axis = np.asarray(x_axis, dtype=float)
        self.y_axis = np.asarray(y_axis, dtype=float)
        self.f11, self.f12, self.f22 = f11, f12, f22
        interpolators = [RegularGridInterpolator((self.x_axis, self.y_axis), comp, method="linear",
                                                 bounds_error=False, fill_value=0.0)
                         for comp in (f11, f12, f22)]

        def components(z):
            pts = np.stack([np.real(z).ravel(), np.imag(z).ravel()], axis=-1)
            return tuple(interp(pts).reshape(np.shape(z)) for interp in interpolators)

        super().__init__(components, support_margin=0.0, name=name)


def decompose_components(f11, f12, f22):
    """f0 = (f11 + f22) / 2 and f2 = (f11 - f22) / 4 + i f12 / 2"""
    f0 = (np.asarray(f11) + np.asarray(f22)) / 2.0
    f2 = (np.asarray(f11) - np.asarray(f22)) / 4.0 + 0.5j * np.asarray(f12)
    return f0, f2


def decompose_f0_f2(field, x):
    """
    Complex decomposition of a tensor field at point(s) x
    :param field: TensorField
    :param x: point(s) in the closed disk
    :return: (f0 real, f2 complex)
    """
    return field.decompose(x)


def assemble_components(f0, f2):
    """
    Inverse of decompose_components: f11 = f0 + 2 Re f2, f12 = 2 Im f2, f22 = f0 - 2 Re f2
    """
    f0 = np.real(np.asarray(f0))
    f2 = np.asarray(f2, dtype=complex)
    if f0.shape != f2.shape:
        raise ShapeError(f"Attention, f0 of shape {f0.shape} and f2 of shape {f2.shape} are not on a common grid.")
    return f0 + 2.0 * f2.real, 2.0 * f2.imag, f0 - 2.0 * f2.real


def assemble_tensor(f0, f2, x_axis, y_axis, name="assembled_tensor"):
    """
    Build the gridded tensor field with complex decomposition (f0, f2) sampled on the Cartesian grid x_axis x y_axis
    :return: GriddedTensorField
    """
    f11, f12, f22 = assemble_components(f0, f2)
    logger.debug(f"Assembled the tensor '{name}' on a {len(x_axis)} x {len(y_axis)} grid.")
    return GriddedTensorField(x_axis, y_axis, f11, f12, f22, name=name)


def source_term(field, x, phi, cross_check_tol=None):
    """
    Source of the transport equation <F(x) theta, theta>. Computed as theta^T F theta; the mode formula
    f0 + conj(f2) e^{2 i phi} + f2 e^{-2 i phi} is evaluated too when cross_check_tol is given, and the two must agree.
    :param field: TensorField
    :param x: point(s)
    :param phi: angle(s) of the direction
    :param cross_check_tol: optional tolerance of the agreement check
    :return: real array
    """
    direct = field.source(x, phi)
    if cross_check_tol is not None:
        f0, f2 = field.decompose(x)
        via_modes = f0 + np.conj(f2) * np.exp(2j * phi) + f2 * np.exp(-2j * phi)
        gap = np.max(np.abs(direct - via_modes)) if np.size(direct) else 0.0
        if gap > cross_check_tol:
            raise PreconditionError(f"Attention, the direct and the mode evaluation of the source term differ by "
                                    f"{gap}.")
    return direct


def make_potential_tensor(vector_field, domain, step=1e-4, jacobian=None, name="potential_tensor"):
    """
    Symmetrized gradient F_jk = (d_j v_k + d_k v_j) / 2 of a vector field vanishing on the boundary. Tensors of this
    form lie in the null space of the (non-attenuated) X-ray transform.
    :param vector_field: callable mapping complex points z to (v1, v2)
    :param domain: geometry.domain.Domain
    :param step: central difference step, used when no jacobian is given
    :param jacobian: optional callable mapping z to (d1 v1, d2 v1, d1 v2, d2 v2)
    :param name: label of the tensor field
    :return: TensorField
    """
    v1_b, v2_b = vector_field(domain.zeta)
    leak = max(np.max(np.abs(v1_b)), np.max(np.abs(v2_b)))
    if leak > 1e-10:
        raise PreconditionError(f"Attention, the vector field does not vanish on the boundary (max |v| = {leak}).")

    if jacobian is None:
        def jacobian(z):
            v1_xp, v2_xp = vector_field(z + step)
            v1_xm, v2_xm = vector_field(z - step)
            v1_yp, v2_yp = vector_field(z + 1j * step)
            v1_ym, v2_ym = vector_field(z - 1j * step)
            return ((v1_xp - v1_xm) / (2 * step), (v1_yp - v1_ym) / (2 * step),
                    (v2_xp - v2_xm) / (2 * step), (v2_yp - v2_ym) / (2 * step))

    def components(z):
        d1v1, d2v1, d1v2, d2v2 = jacobian(z)
        return d1v1, 0.5 * (d2v1 + d1v2), d2v2

    return TensorField(components, support_margin=0.0, name=name)


class Attenuation:
    """
    Attenuation a on the closed disk with min a > 0, together with its smooth compactly supported extension
    a_ext = a * cutoff(|x|), equal to a on the closed disk and vanishing outside radius + cutoff_width.
    """

    def __init__(self, values, radius, cutoff_width, name="attenuation", descriptor=None):
        """
        Constructor of the attenuation
        :param values: callable mapping complex points z to real values of a (defined on a neighborhood of the disk)
        :param radius: radius of the disk
        :param cutoff_width: width of the transition band of the extension
        :param name: label used in logs and file metadata
        :param descriptor: JSON-serializable description
        """
        if not cutoff_width > 0:
            raise ConfigError(f"Attention, the cutoff width of the attenuation must be positive, got {cutoff_width}.")
        self._values = values
        self.radius = float(radius)
        self.cutoff_width = float(cutoff_width)
        self.name = name
        self.descriptor = descriptor

    @property
    def support_radius(self):
        return self.radius + self.cutoff_width

    def __call__(self, z):
        z = as_complex(z)
        return np.broadcast_to(np.asarray(self._values(z), dtype=float), np.shape(z))

    def extension(self, z):
        z = as_complex(z)
        r = np.abs(z)
        out = np.zeros(np.shape(z))
        inside = r < self.support_radius
        out[inside] = self(z[inside]) * smooth_cutoff(r[inside], self.radius, self.cutoff_width)
        return out

    def min_value(self, samples=64):
        """Minimum of a over a polar evaluation grid of the closed disk"""
        r = np.linspace(0.0, self.radius, samples)
        t = 2.0 * np.pi * np.arange(4 * samples) / (4 * samples)
        z = np.multiply.outer(r, np.exp(1j * t))
        return float(np.min(self(z)))

    def check_positive(self, min_a):
        """
        Verify a >= min_a > 0 on the evaluation grid
        :param min_a: lower bound required by the attenuated pipelines
        :return: the observed minimum
        """
        observed = self.min_value()
        if observed < min_a or observed <= 0:
            raise ConfigError(f"Attention, the attenuation '{self.name}' has minimum {observed} on the disk, below the "
                              f"required lower bound {min_a}.")
        return observed
