import numpy as np
import pytest

from geometry.domain import BOUNDARY_SET, Domain, angle_grid, as_complex, direction
from tensoray_errors import ConfigError, DomainError


def test_boundary_nodes_and_normal(small_domain):
    assert small_domain.M == 32
    assert np.allclose(np.abs(small_domain.zeta), 1.0)
    assert np.allclose(small_domain.normal_angle, small_domain.s)
    assert small_domain.ds == pytest.approx(2 * np.pi / 32)


@pytest.mark.parametrize("radius, nodes", [(0.0, 32), (-1.0, 32), (1.0, 7), (1.0, 6), (1.0, 33)])
def test_invalid_domain(radius, nodes):
    with pytest.raises(ConfigError):
        Domain(radius=radius, boundary_nodes=nodes)


def test_as_complex_pairs():
    assert as_complex(np.array([1.0, 2.0])) == 1 + 2j
    assert np.allclose(as_complex(np.array([[1.0, 0.0], [0.0, -1.0]])), [1.0, -1j])
    with pytest.raises(DomainError):
        as_complex(np.array([1.0, 2.0, 3.0]))


def test_exit_distance(small_domain):
    assert small_domain.exit_distance(0j, direction(0.3)) == pytest.approx(1.0)
    # diameter from the boundary point (1, 0) pointing inwards
    assert small_domain.exit_distance(1 + 0j, -1 + 0j) == pytest.approx(2.0)
    assert small_domain.exit_distance(1 + 0j, 1 + 0j) == pytest.approx(0.0)
    assert small_domain.exit_distance(0.5 + 0j, 1j) == pytest.approx(np.sqrt(0.75))
    with pytest.raises(DomainError):
        small_domain.exit_distance(1.5 + 0j, 1 + 0j)


def test_classify(small_domain):
    assert small_domain.classify(1 + 0j, 1 + 0j) == BOUNDARY_SET.OUTFLOW
    assert small_domain.classify(1 + 0j, -1 + 0j) == BOUNDARY_SET.INFLOW
    assert small_domain.classify(1 + 0j, 1j) == BOUNDARY_SET.TANGENT
    with pytest.raises(DomainError):
        small_domain.classify(0.5 + 0j, 1 + 0j)


def test_ray_classes_counts():
    domain = Domain(radius=1.0, boundary_nodes=16)
    classes = domain.ray_classes(16)
    assert classes.shape == (16, 16)
    # K divisible by 4: two tangent directions per node, the rest split evenly
    assert np.all((classes == 1).sum(axis=1) == 7)
    assert np.all((classes == -1).sum(axis=1) == 7)
    assert np.all((classes == 0).sum(axis=1) == 2)
    # theta_0 = (1, 0) leaves the disk through zeta_0
    assert classes[0, 0] == 1 and classes[0, 8] == -1


def test_angle_grid():
    assert np.allclose(angle_grid(4), [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_boundary_derivative_is_spectral():
    domain = Domain(radius=2.0, boundary_nodes=32)
    values = np.sin(2 * domain.s) + 1j * np.cos(5 * domain.s)
    expected = (2 * np.cos(2 * domain.s) - 5j * np.sin(5 * domain.s)) / 2.0
    assert np.allclose(domain.boundary_derivative(values), expected, atol=1e-12)
    stacked = np.stack([values, 2 * values], axis=1)
    assert np.allclose(domain.boundary_derivative(stacked)[:, 1], 2 * expected, atol=1e-12)
    with pytest.raises(DomainError):
        domain.boundary_derivative(values[:-1])


def test_trig_interpolate(small_domain):
    values = np.cos(3 * small_domain.s) + 0.5
    s = np.array([0.123, 1.7, 4.0])
    out = small_domain.trig_interpolate(values, s)
    assert np.allclose(out, np.cos(3 * s) + 0.5, atol=1e-12)
    assert np.max(np.abs(out.imag)) < 1e-12
