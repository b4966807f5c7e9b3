import numpy as np
import pytest

from fields.model import (Attenuation, GriddedTensorField, assemble_components, assemble_tensor,
                          decompose_components, decompose_f0_f2, linear_combination, make_potential_tensor,
                          smooth_cutoff, source_term, TensorField)
from fields.phantoms import (PHANTOM_KINDS, attenuation_from_descriptor, bump_tensor, constant_attenuation_with_cutoff,
                             default_bump_tensor, gaussian_attenuation, gaussian_isotropic, potential_tensor,
                             quartic_vector_field, tensor_from_descriptor, zero_tensor)
from tensoray_errors import ConfigError, PreconditionError, ShapeError

POINTS = np.array([0.0, 0.3 + 0.2j, -0.5j, 0.7 - 0.1j])


def test_decompose_assemble_inverse():
    rng = np.random.default_rng(3)
    f11, f12, f22 = rng.normal(size=(3, 10))
    f0, f2 = decompose_components(f11, f12, f22)
    back = assemble_components(f0, f2)
    for got, expected in zip(back, (f11, f12, f22)):
        assert np.allclose(got, expected, atol=1e-14)


def test_assemble_shape_mismatch():
    with pytest.raises(ShapeError):
        assemble_components(np.zeros(3), np.zeros(4, dtype=complex))


def test_source_term_modes_agree():
    field = default_bump_tensor()
    phi = np.linspace(0, 2 * np.pi, 7)[:, None]
    direct = source_term(field, POINTS[None, :], phi, cross_check_tol=1e-12)
    f0, f2 = decompose_f0_f2(field, POINTS)
    via_modes = f0 + 2 * np.real(f2 * np.exp(-2j * phi))
    assert np.allclose(direct, via_modes, atol=1e-12)


def test_isotropic_source_is_direction_independent():
    field = TensorField(lambda z: (np.ones(np.shape(z)), np.zeros(np.shape(z)), np.ones(np.shape(z))))
    assert np.allclose(field.source(POINTS, 1.234), 1.0)


def test_linear_combination():
    a, b = default_bump_tensor(), gaussian_isotropic(0.3)
    combo = linear_combination([(2.0, a), (-1.0, b)])
    for got, fa, fb in zip(combo.evaluate(POINTS), a.evaluate(POINTS), b.evaluate(POINTS)):
        assert np.allclose(got, 2.0 * fa - fb)
    assert np.allclose((a + b).evaluate(POINTS)[0], a.evaluate(POINTS)[0] + b.evaluate(POINTS)[0])
    assert np.allclose(a.scaled(3.0).evaluate(POINTS)[1], 3.0 * a.evaluate(POINTS)[1])


def test_zero_and_bump_support():
    assert np.all(zero_tensor().evaluate(POINTS)[0] == 0.0)
    field = default_bump_tensor()
    assert field.compact and field.support_margin > 0
    far = np.array([0.95, -0.95j, 0.7 + 0.67j])
    for comp in field.evaluate(far):
        assert np.all(comp == 0.0)


def test_bump_outside_disk_rejected():
    with pytest.raises(ConfigError):
        bump_tensor({"f11": [{"amplitude": 1.0, "center": [0.8, 0.0], "rho": 0.3}]})


def test_potential_tensor_requires_vanishing_trace(small_domain):
    with pytest.raises(PreconditionError):
        make_potential_tensor(lambda z: (np.ones(np.shape(z)), np.zeros(np.shape(z))), small_domain)


def test_potential_tensor_jacobian_matches_differences(small_domain):
    exact = potential_tensor(small_domain)
    field, _ = quartic_vector_field()
    numeric = make_potential_tensor(field, small_domain, step=1e-5)
    for got, expected in zip(numeric.evaluate(POINTS), exact.evaluate(POINTS)):
        assert np.allclose(got, expected, atol=1e-7)


def test_gridded_tensor_field_bilinear():
    x = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(x, x, indexing="ij")
    tensor = GriddedTensorField(x, x, 2 * X + Y, X - Y, np.ones_like(X))
    f11, f12, f22 = tensor.evaluate(np.array([0.33 + 0.21j]))
    assert f11[0] == pytest.approx(0.87)
    assert f12[0] == pytest.approx(0.12)
    assert f22[0] == pytest.approx(1.0)
    # zero outside the grid
    assert tensor.evaluate(np.array([3.0 + 0j]))[2][0] == 0.0
    with pytest.raises(ShapeError):
        GriddedTensorField(x, x, X, X, X[:-1])


def test_assemble_tensor_grid():
    x = np.linspace(-1, 1, 5)
    f0 = np.ones((5, 5))
    f2 = np.full((5, 5), 0.25 + 0.5j)
    tensor = assemble_tensor(f0, f2, x, x)
    assert np.allclose(tensor.f11, 1.5) and np.allclose(tensor.f12, 1.0) and np.allclose(tensor.f22, 0.5)


def test_smooth_cutoff():
    r = np.array([0.0, 0.5, 1.0, 1.05, 1.1, 1.15, 1.2, 2.0])
    c = smooth_cutoff(r, 1.0, 0.2)
    assert np.all(c[:3] == 1.0) and np.all(c[-2:] == 0.0)
    assert np.all((c[3:6] > 0) & (c[3:6] < 1))
    assert np.all(np.diff(c) <= 0)
    assert c[4] == pytest.approx(0.5)


def test_attenuation_extension():
    a = gaussian_attenuation(0.2, 0.3, 0.5, radius=1.0, cutoff_width=0.2)
    inside = np.array([0.0, 0.5j, -0.99])
    assert np.allclose(a.extension(inside), a(inside))
    assert np.all(a.extension(np.array([1.2, 1.5j, -3.0])) == 0.0)
    assert a.support_radius == pytest.approx(1.2)
    assert a.min_value() == pytest.approx(0.2 + 0.3 * np.exp(-4.0), rel=1e-6)
    assert a.check_positive(0.1) > 0.2
    with pytest.raises(ConfigError):
        a.check_positive(0.5)


def test_attenuation_invalid():
    with pytest.raises(ConfigError):
        Attenuation(lambda z: 1.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        constant_attenuation_with_cutoff(0.0)


def test_descriptors(small_domain):
    assert tensor_from_descriptor({"kind": PHANTOM_KINDS.ZERO}, small_domain).name == "zero"
    g = tensor_from_descriptor({"kind": "gaussian_isotropic", "sigma": 0.3}, small_domain)
    assert g.evaluate(np.array([0j]))[0][0] == pytest.approx(1.0)
    assert tensor_from_descriptor({"kind": "bump_tensor"}, small_domain).compact
    assert tensor_from_descriptor({"kind": "potential"}, small_domain).descriptor == {"kind": "potential"}
    with pytest.raises(ConfigError):
        tensor_from_descriptor({"kind": "unknown"}, small_domain)
    assert attenuation_from_descriptor(None, small_domain, 0.2) is None
    a = attenuation_from_descriptor({"kind": "constant", "a0": 0.4}, small_domain, 0.2)
    assert np.allclose(a(POINTS), 0.4)
    with pytest.raises(ConfigError):
        attenuation_from_descriptor({"kind": "exotic"}, small_domain, 0.2)
