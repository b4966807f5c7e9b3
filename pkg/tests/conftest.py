import numpy as np
import pytest
from scipy.special import erf

from geometry.domain import Domain


def gaussian_line_integral(sigma, p, radius=1.0, amplitude=1.0):
    """Integral of amplitude exp(-|x|^2 / sigma^2) over the chord at distance p from the center of the disk"""
    half = np.sqrt(np.maximum(radius ** 2 - np.asarray(p) ** 2, 0.0))
    return amplitude * sigma * np.sqrt(np.pi) * np.exp(-np.asarray(p) ** 2 / sigma ** 2) * erf(half / sigma)


@pytest.fixture
def small_domain():
    return Domain(radius=1.0, boundary_nodes=32)


@pytest.fixture(scope="session")
def domain_64():
    return Domain(radius=1.0, boundary_nodes=64)


@pytest.fixture(scope="session")
def domain_128():
    return Domain(radius=1.0, boundary_nodes=128)


@pytest.fixture(scope="session")
def gaussian_fan_128(domain_128):
    from fields.phantoms import gaussian_isotropic
    from transport.fan import make_fan
    return make_fan(gaussian_isotropic(0.3), None, domain_128, 128, h_ray=2e-3)


@pytest.fixture(scope="session")
def bump_fan_128(domain_128):
    from fields.phantoms import default_bump_tensor
    from transport.fan import make_fan
    return make_fan(default_bump_tensor(), None, domain_128, 128, h_ray=2e-3)
