"""
Analytic phantoms (tensor fields and attenuations) and their JSON-style descriptors.
"""
import numpy as np

from fields.model import Attenuation, TensorField, make_potential_tensor
from tensoray_errors import ConfigError


class PHANTOM_KINDS:
    ZERO = "zero"
    GAUSSIAN_ISOTROPIC = "gaussian_isotropic"
    BUMP_TENSOR = "bump_tensor"
    POTENTIAL = "potential"


class ATTENUATION_KINDS:
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"


def zero_tensor():
    return TensorField(lambda z: (0.0, 0.0, 0.0), support_margin=1.0, name="zero",
                       descriptor={"kind": PHANTOM_KINDS.ZERO}, compact=True)


def gaussian_isotropic(sigma, center=(0.0, 0.0), amplitude=1.0):
    """
    Isotropic tensor amplitude * exp(-|x - c|^2 / sigma^2) * I. Its line integral along a line at distance p from c is
    amplitude * sigma * sqrt(pi) * exp(-p^2 / sigma^2) (up to the truncation outside the disk).
    """
    if not sigma > 0:
        raise ConfigError(f"Attention, the Gaussian width must be positive, got {sigma}.")
    c = complex(center[0], center[1])

    def components(z):
        s = amplitude * np.exp(-np.abs(z - c) ** 2 / sigma ** 2)
        return s, np.zeros_like(s), s

    return TensorField(components, name="gaussian_isotropic",
                       descriptor={"kind": PHANTOM_KINDS.GAUSSIAN_ISOTROPIC, "sigma": sigma,
                                   "center": list(center), "amplitude": amplitude})


def bump(z, center, rho):
    """C2 bump (1 - |x - c|^2 / rho^2)^3 supported on |x - c| < rho, vanishing to second order at the edge"""
    q = 1.0 - np.abs(z - center) ** 2 / rho ** 2
    return np.where(q > 0, q, 0.0) ** 3


def bump_tensor(bumps, radius=1.0):
    """
    Tensor whose components are sums of C2 bumps
    :param bumps: dict mapping 'f11', 'f12', 'f22' to lists of {'amplitude', 'center', 'rho'} dicts
    :param radius: radius of the disk, used to compute the support margin
    :return: compactly supported TensorField
    """
    parsed = dict()
    margin = radius
    for key in ("f11", "f12", "f22"):
        parsed[key] = list()
        for item in bumps.get(key, list()):
            c = complex(item["center"][0], item["center"][1])
            rho = float(item["rho"])
            if not rho > 0:
                raise ConfigError(f"Attention, bump radius must be positive, got {rho}.")
            parsed[key].append((float(item["amplitude"]), c, rho))
            margin = min(margin, radius - abs(c) - rho)
    if margin <= 0:
        raise ConfigError("Attention, the bumps of a compactly supported phantom must lie strictly inside the disk.")

    def components(z):
        out = list()
        for key in ("f11", "f12", "f22"):
            acc = np.zeros(np.shape(z))
            for amplitude, c, rho in parsed[key]:
                acc = acc + amplitude * bump(z, c, rho)
            out.append(acc)
        return tuple(out)

    return TensorField(components, support_margin=margin, name="bump_tensor",
                       descriptor={"kind": PHANTOM_KINDS.BUMP_TENSOR, "bumps": bumps}, compact=True)


def default_bump_tensor(radius=1.0):
    """Anisotropic C2 bump phantom used by the command line defaults and the test-suite"""
    bumps = {
        "f11": [{"amplitude": 1.0, "center": [0.15 * radius, 0.1 * radius], "rho": 0.45 * radius}],
        "f12": [{"amplitude": 0.5, "center": [-0.2 * radius, 0.05 * radius], "rho": 0.4 * radius}],
        "f22": [{"amplitude": 0.8, "center": [0.0, -0.2 * radius], "rho": 0.4 * radius}],
    }
    return bump_tensor(bumps, radius=radius)


def quartic_vector_field(radius=1.0):
    """Vector field v = (w, 0), w = (1 - |x|^2 / radius^2)^2, vanishing on the boundary, with its exact jacobian"""

    def field(z):
        w = (1.0 - np.abs(z) ** 2 / radius ** 2) ** 2
        return w, np.zeros_like(w)

    def jacobian(z):
        x, y = np.real(z), np.imag(z)
        q = 1.0 - np.abs(z) ** 2 / radius ** 2
        zeros = np.zeros_like(x)
        return -4.0 * x * q / radius ** 2, -4.0 * y * q / radius ** 2, zeros, zeros

    return field, jacobian


def potential_tensor(domain):
    field, jacobian = quartic_vector_field(domain.radius)
    tensor = make_potential_tensor(field, domain, jacobian=jacobian)
    tensor.descriptor = {"kind": PHANTOM_KINDS.POTENTIAL}
    return tensor


def constant_attenuation_with_cutoff(a0, radius=1.0, cutoff_width=0.2):
    if not a0 > 0:
        raise ConfigError(f"Attention, a constant attenuation must be positive, got {a0}.")
    return Attenuation(lambda z: np.full(np.shape(z), float(a0)), radius, cutoff_width, name="constant",
                       descriptor={"kind": ATTENUATION_KINDS.CONSTANT, "a0": a0})


def gaussian_attenuation(base, amplitude, sigma, center=(0.0, 0.0), radius=1.0, cutoff_width=0.2):
    """Attenuation base + amplitude * exp(-|x - c|^2 / sigma^2); its minimum on the disk is at least base"""
    c = complex(center[0], center[1])

    def values(z):
        return base + amplitude * np.exp(-np.abs(z - c) ** 2 / sigma ** 2)

    return Attenuation(values, radius, cutoff_width, name="gaussian",
                       descriptor={"kind": ATTENUATION_KINDS.GAUSSIAN, "base": base, "amplitude": amplitude,
                                   "sigma": sigma, "center": list(center)})


def tensor_from_descriptor(descriptor, domain):
    """
    Instantiate a tensor phantom from its JSON-style descriptor
    :param descriptor: dict with a 'kind' key (one of PHANTOM_KINDS) and the kind parameters
    :param domain: geometry.domain.Domain
    :return: TensorField
    """
    if descriptor is None:
        return zero_tensor()
    kind = descriptor.get("kind")
    if kind == PHANTOM_KINDS.ZERO:
        return zero_tensor()
    elif kind == PHANTOM_KINDS.GAUSSIAN_ISOTROPIC:
        return gaussian_isotropic(float(descriptor.get("sigma", 0.3)), tuple(descriptor.get("center", (0.0, 0.0))),
                                  float(descriptor.get("amplitude", 1.0)))
    elif kind == PHANTOM_KINDS.BUMP_TENSOR:
        if "bumps" in descriptor:
            return bump_tensor(descriptor["bumps"], radius=domain.radius)
        return default_bump_tensor(domain.radius)
    elif kind == PHANTOM_KINDS.POTENTIAL:
        return potential_tensor(domain)
    raise ConfigError(f"Attention, unknown phantom kind: {kind}")


def attenuation_from_descriptor(descriptor, domain, cutoff_width):
    """
    Instantiate an attenuation from its JSON-style descriptor, None when no attenuation is requested
    """
    if descriptor is None:
        return None
    kind = descriptor.get("kind")
    if kind == ATTENUATION_KINDS.CONSTANT:
        return constant_attenuation_with_cutoff(float(descriptor["a0"]), domain.radius, cutoff_width)
    elif kind == ATTENUATION_KINDS.GAUSSIAN:
        return gaussian_attenuation(float(descriptor.get("base", 0.2)), float(descriptor.get("amplitude", 0.3)),
                                    float(descriptor.get("sigma", 0.5)), tuple(descriptor.get("center", (0.0, 0.0))),
                                    domain.radius, cutoff_width)
    raise ConfigError(f"Attention, unknown attenuation kind: {kind}")
