import logging

import numpy as np
import pytest

from attenuation.pack import build_pack
from fields.phantoms import default_bump_tensor, gaussian_attenuation, zero_tensor
from modes.sequences import angular_modes
from reconstruct.pipeline import (AttenuatedModes, assemble_u, compat_check, interleave, make_grid,
                                  mode_system_residual, psi_default_att, reconstruct_att, reconstruct_free, roundtrip)
from reconstruct.psi import PSI_KINDS, perturbed_psi, psi_free_from_rule
from tensoray_errors import ConfigError, ShapeError
from transport.fan import make_fan
from transport.xray import transport_solution

N = 24
STEP = 0.025
COARSE_STEP = 0.05
MARGIN = 0.02
H_RAY = 2e-3
TOL_FREE = 2e-2
TOL_ATTENUATED = 5e-2


def random_points(count, seed, radius=0.9):
    """Uniform points of the disk |z| <= radius and uniform direction angles"""
    rng = np.random.default_rng(seed)
    z = radius * np.sqrt(rng.uniform(size=count)) * np.exp(2j * np.pi * rng.uniform(size=count))
    return z, 2 * np.pi * rng.uniform(size=count)


@pytest.fixture(scope="module")
def free_result(bump_fan_128, domain_128):
    return reconstruct_free(bump_fan_128, truncation=N, grid=make_grid(domain_128, STEP, MARGIN))


@pytest.fixture(scope="module")
def attenuation():
    return gaussian_attenuation(0.2, 0.3, 0.5)


@pytest.fixture(scope="module")
def pack(attenuation, domain_128):
    grid = make_grid(domain_128, STEP, MARGIN)
    return build_pack(attenuation, grid, domain_128, 128, N, radon_step=1.0 / 128, tol_mass=1e-3, threads=4)


@pytest.fixture(scope="module")
def attenuated_fan(attenuation, domain_128):
    return make_fan(default_bump_tensor(), attenuation, domain_128, 128, h_ray=2e-3)


@pytest.fixture(scope="module")
def att_result(attenuated_fan, pack):
    return reconstruct_att(attenuated_fan, pack)


def test_interleave():
    out = interleave(np.array([[1, 3, 5]]), np.array([[2, 4]]))
    assert np.array_equal(out, [[1, 2, 3, 4, 5]])
    with pytest.raises(ShapeError):
        interleave(np.zeros((1, 4)), np.zeros((1, 1)))


def test_make_grid_is_padded(domain_64):
    grid = make_grid(domain_64, 0.1, 0.15)
    assert grid.axis[-1] == pytest.approx(1.4)
    assert grid.margin == 0.15
    assert grid.support_radius == pytest.approx(1.15)
    assert make_grid(domain_64, 0.1).margin == pytest.approx(0.02)
    for margin in (0.0, 0.34, 0.5):
        with pytest.raises(ConfigError):
            make_grid(domain_64, 0.1, margin)


def test_zero_data_gives_zero_tensor(domain_64):
    fan = make_fan(zero_tensor(), None, domain_64, 64)
    result = reconstruct_free(fan, truncation=N, grid=make_grid(domain_64, 0.1, 0.15))
    assert np.all(result.tensor.f11 == 0.0) and np.all(result.tensor.f12 == 0.0) and np.all(result.tensor.f22 == 0.0)
    assert result.diagnostics["range_residuals"]["g_even"] == 0.0


def test_psi_on_another_grid_rejected(domain_64):
    fan = make_fan(zero_tensor(), None, domain_64, 64)
    other = make_grid(domain_64, 0.1, 0.2)
    psi = psi_free_from_rule(PSI_KINDS.POISSON_DEFAULT, angular_modes(fan, N), domain_64, other)
    with pytest.raises(ShapeError):
        reconstruct_free(fan, psi=psi, truncation=N, grid=make_grid(domain_64, 0.1, 0.15))


def test_range_violation_only_warns(domain_64, caplog):
    rng = np.random.default_rng(1)
    fan = make_fan(zero_tensor(), None, domain_64, 64)
    noisy = fan.with_values(np.where(domain_64.ray_classes(64) > 0, rng.normal(scale=0.1, size=(64, 64)), 0.0))
    with caplog.at_level(logging.WARNING):
        result = reconstruct_free(noisy, truncation=N, grid=make_grid(domain_64, 0.1, 0.15))
    assert "Range condition" in caplog.text
    assert result.diagnostics["range_residuals"]["g_even"] > 5e-3


def test_free_reconstruction_diagnostics(free_result):
    diagnostics = free_result.diagnostics
    assert max(diagnostics["range_residuals"].values()) < 5e-3
    assert diagnostics["l_analytic_even"] < 1e-3
    assert diagnostics["l_analytic_odd"] < 1e-3
    assert diagnostics["mode_system"] < 1e-2
    assert diagnostics["u0_imaginary"] < 1e-3
    assert diagnostics["tensor_radius"] == pytest.approx(1.0 + 1.5 * STEP)
    assert diagnostics["psi"] == {"kind": PSI_KINDS.POISSON_DEFAULT}
    assert sorted(free_result.modes)[0] == -N
    grid = free_result.grid
    assert np.all(np.isfinite(free_result.f0[grid.support]))
    assert np.all(np.isnan(free_result.f0[~grid.support]))
    assert np.all(free_result.tensor.f11[~grid.support] == 0.0)


def test_free_roundtrip(free_result, bump_fan_128):
    _, error = roundtrip(free_result, bump_fan_128, h_ray=H_RAY)
    assert error < TOL_FREE


def test_free_roundtrip_improves_with_the_grid(free_result, bump_fan_128, domain_128):
    coarse = reconstruct_free(bump_fan_128, truncation=N, grid=make_grid(domain_128, COARSE_STEP, MARGIN))
    _, coarse_error = roundtrip(coarse, bump_fan_128, h_ray=H_RAY)
    _, fine_error = roundtrip(free_result, bump_fan_128, h_ray=H_RAY)
    assert fine_error < coarse_error


def test_free_reconstruction_is_gauge_dependent(free_result, bump_fan_128):
    grid = free_result.grid
    other = reconstruct_free(bump_fan_128, psi=perturbed_psi(free_result.psi, 0.05), truncation=N, grid=grid)
    gap = np.nanmax(np.abs(other.f0 - free_result.f0))
    assert gap > 1e-3
    _, error = roundtrip(other, bump_fan_128, h_ray=H_RAY)
    assert error < TOL_FREE


def test_radial_blend_gauge(free_result, bump_fan_128, domain_128):
    grid = free_result.grid
    psi = psi_free_from_rule(PSI_KINDS.RADIAL_BLEND, angular_modes(bump_fan_128, N), domain_128, grid)
    result = reconstruct_free(bump_fan_128, psi=psi, truncation=N, grid=grid)
    assert result.diagnostics["psi"]["kind"] == PSI_KINDS.RADIAL_BLEND
    gap = max(np.max(np.abs(getattr(result.tensor, key) - getattr(free_result.tensor, key)))
              for key in ("f11", "f12", "f22"))
    assert gap > 1e-3
    _, error = roundtrip(result, bump_fan_128, h_ray=H_RAY)
    assert error < TOL_FREE


def test_assemble_u_solves_transport(free_result, domain_128):
    z = np.array([0.1 + 0.2j, -0.3 + 0.1j])
    phi = np.array([[0.3], [2.0], [4.5]])
    u = assemble_u(free_result, z, phi)
    assert u.shape == (3, 2) and not np.iscomplexobj(u)
    z, phi = random_points(20, seed=3)
    u = assemble_u(free_result, z, phi)
    expected = transport_solution(free_result.tensor, None, domain_128, z, phi, h_ray=H_RAY)
    assert np.max(np.abs(u - expected)) / np.max(np.abs(expected)) < TOL_FREE


def test_mode_system_residual_of_exact_modes(free_result):
    grid = free_result.grid
    modes = {0: np.zeros(grid.z.shape, dtype=complex), -1: np.zeros(grid.z.shape, dtype=complex),
             -2: np.conj(grid.z), -3: np.zeros(grid.z.shape, dtype=complex), -4: -grid.z}
    assert mode_system_residual(modes, grid) < 1e-10


def test_attenuated_range_and_compatibility(attenuated_fan, pack):
    am = AttenuatedModes(attenuated_fan, pack, N)
    assert max(am.range_residuals.values()) < 5e-3
    clean = compat_check(attenuated_fan, pack, attenuated_modes=am)
    assert clean < 5e-3
    am.ms.coefficients[:, N] += 0.01 * np.cos(2 * attenuated_fan.domain.s)
    dirty = float(np.max(np.abs(am.compat_residual())))
    assert dirty > 0.02 - clean - 1e-12


def test_attenuated_default_psi(attenuated_fan, pack):
    am = AttenuatedModes(attenuated_fan, pack, N)
    psi = psi_default_att(attenuated_fan, pack, attenuated_modes=am)
    assert psi.kind == PSI_KINDS.RADIAL_BLEND
    assert np.allclose(psi.boundary_trace, am.g0)
    assert np.allclose(psi.normal_derivative, am.normal_derivative())
    assert np.max(np.abs(np.imag(psi.values[pack.grid.cover]))) == 0.0
    assert np.all(np.isfinite(psi.dbar[pack.grid.support]))


def test_attenuated_roundtrip(att_result, attenuated_fan, attenuation):
    assert att_result.attenuation_name == "gaussian"
    assert att_result.diagnostics["pack"]["N"] == N
    assert att_result.diagnostics["compat"] < 5e-3
    _, error = roundtrip(att_result, attenuated_fan, attenuation=attenuation, h_ray=H_RAY)
    assert error < TOL_ATTENUATED


def test_attenuated_roundtrip_improves_with_the_grid(att_result, attenuated_fan, attenuation, domain_128):
    coarse_pack = build_pack(attenuation, make_grid(domain_128, COARSE_STEP, MARGIN), domain_128, 128, N,
                             radon_step=1.0 / 128, tol_mass=1e-3, threads=4)
    coarse = reconstruct_att(attenuated_fan, coarse_pack)
    _, coarse_error = roundtrip(coarse, attenuated_fan, attenuation=attenuation, h_ray=H_RAY)
    _, fine_error = roundtrip(att_result, attenuated_fan, attenuation=attenuation, h_ray=H_RAY)
    assert fine_error < coarse_error


def test_attenuated_assemble_u_solves_transport(att_result, attenuation, domain_128):
    z, phi = random_points(20, seed=5)
    u = assemble_u(att_result, z, phi)
    expected = transport_solution(att_result.tensor, attenuation, domain_128, z, phi, h_ray=H_RAY)
    assert np.max(np.abs(u - expected)) / np.max(np.abs(expected)) < TOL_ATTENUATED


def test_attenuated_reconstruction_is_gauge_dependent(att_result, attenuated_fan, pack, attenuation):
    other = reconstruct_att(attenuated_fan, pack, psi=perturbed_psi(att_result.psi, 0.05))
    assert np.nanmax(np.abs(other.f0 - att_result.f0)) > 1e-3
    first, first_error = roundtrip(att_result, attenuated_fan, attenuation=attenuation, h_ray=H_RAY)
    second, second_error = roundtrip(other, attenuated_fan, attenuation=attenuation, h_ray=H_RAY)
    assert max(first_error, second_error) < TOL_ATTENUATED
    scale = np.max(np.abs(attenuated_fan.values))
    assert np.max(np.abs(first.values - second.values)) / scale < TOL_ATTENUATED


def test_attenuation_guard(attenuated_fan, pack):
    with pytest.raises(ConfigError):
        reconstruct_att(attenuated_fan, pack, min_a=1e-9)
    with pytest.raises(ConfigError):
        reconstruct_att(attenuated_fan, pack, min_a=0.5)


def test_attenuated_zero_data(pack, domain_128):
    fan = make_fan(zero_tensor(), None, domain_128, 128)
    result = reconstruct_att(fan, pack)
    assert np.allclose(result.tensor.f11, 0.0) and np.allclose(result.tensor.f22, 0.0)
