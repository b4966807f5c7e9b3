import numpy as np
import pytest
from scipy.special import dawsn

from aanalytic.differences import ORDERS
from aanalytic.sequence_field import InteriorGrid, SequenceField
from attenuation.identities import mode_recursion_residuals, transport_residual
from attenuation.integrating_factor import (LineTables, beam_transform, classical_hilbert, direct_h, fourier_hilbert,
                                            periodization_kernel, radon)
from attenuation.pack import (alpha_beta_modes, build_h, build_pack, convolution_gap, convolve_modes,
                              load_or_build_pack, load_pack, pack_cache_key, save_pack, u_from_v, v_from_u)
from fields.phantoms import constant_attenuation_with_cutoff, gaussian_attenuation
from geometry.domain import Domain
from tensoray_errors import ConfigError, FileFormatError, ResolutionError, ShapeError

RADON_STEP = 1.0 / 128


@pytest.fixture(scope="module")
def attenuation():
    return gaussian_attenuation(0.2, 0.3, 0.5)


@pytest.fixture(scope="module")
def pack(attenuation):
    domain = Domain(radius=1.0, boundary_nodes=64)
    grid = InteriorGrid(1.0, 0.05, 0.2, padding_nodes=3)
    return build_pack(attenuation, grid, domain, 128, 24, radon_step=RADON_STEP, padding=4, tol_mass=1e-3,
                      threads=4)


@pytest.fixture(scope="module")
def tiny_grid():
    return InteriorGrid(1.0, 0.2, 0.3, padding_nodes=3)


def test_fourier_hilbert_is_antiinvolution():
    n = 64
    t = 2 * np.pi * np.arange(n) / n
    f = np.sin(3 * t) + 0.5 * np.cos(5 * t)
    assert np.allclose(fourier_hilbert(f), -np.cos(3 * t) + 0.5 * np.sin(5 * t), atol=1e-12)
    assert np.allclose(fourier_hilbert(fourier_hilbert(f)), -f, atol=1e-12)


def test_periodization_kernel_small_offsets():
    x = np.array([0.0, 1e-3, -1e-3, 0.5])
    k = periodization_kernel(x, 100.0)
    assert k[0] == 0.0
    # (1/pi)(1/x - (pi/P) cot(pi x / P)) ~ pi x / (3 P^2)
    assert k[1] == pytest.approx(np.pi * 1e-3 / (3 * 100.0 ** 2), rel=1e-3)
    assert k[2] == pytest.approx(-k[1])


def test_classical_hilbert_of_gaussian():
    ds = 0.05
    s = ds * np.arange(-200, 201)
    out = classical_hilbert(np.exp(-s ** 2), ds)
    assert np.allclose(out, 2 / np.sqrt(np.pi) * dawsn(s), atol=1e-8)


def test_classical_hilbert_of_lorentzian():
    ds = 0.05
    s = ds * np.arange(-640, 641)
    out = classical_hilbert(1.0 / (1.0 + s ** 2), ds)
    window = np.abs(s) <= 5
    assert np.max(np.abs(out[window] - s[window] / (1 + s[window] ** 2))) < 1e-4


def test_classical_hilbert_padding():
    assert np.all(classical_hilbert(np.zeros(16), 0.1) == 0.0)
    with pytest.raises(ConfigError):
        classical_hilbert(np.ones(16), 0.1, padding=2)


def test_beam_and_radon_closed_forms():
    sigma = 0.2
    a = gaussian_attenuation(0.0, 1.0, sigma)
    phi = np.array([0.0, 1.1, 4.0])
    assert np.allclose(beam_transform(a, np.zeros(3, dtype=complex), phi, 1e-3), sigma * np.sqrt(np.pi) / 2,
                       atol=1e-10)
    s = np.array([0.0, 0.1, -0.3])
    assert np.allclose(radon(a, s, 0.7, 1e-3), sigma * np.sqrt(np.pi) * np.exp(-s ** 2 / sigma ** 2), atol=1e-10)


def test_beam_pairs_add_up_to_radon():
    a = gaussian_attenuation(0.1, 1.0, 0.2, center=(0.1, -0.2))
    z = np.array([0.0, 0.3 + 0.4j, -0.5 - 0.1j])
    phi = 0.9
    w = np.exp(1j * phi)
    pair = beam_transform(a, z, phi, 1e-3) + beam_transform(a, z, phi + np.pi, 1e-3)
    s = np.real(z * np.conj(1j * w))
    assert np.allclose(pair, radon(a, s, phi, 1e-3), atol=1e-8)
    # even in (s, theta) -> (-s, -theta)
    assert np.allclose(radon(a, s, phi, 1e-3), radon(a, -s, phi + np.pi, 1e-3), atol=1e-9)


def test_line_tables_match_reference(attenuation):
    z = np.array([0.0, 0.3 + 0.4j, -0.5 - 0.1j, 0.9j, 1.0])
    phi = 2.2
    tables = LineTables(attenuation, phi, RADON_STEP)
    assert np.allclose(tables.beam(z), beam_transform(attenuation, z, phi, 1e-3), atol=1e-4)
    s = np.array([-0.4, 0.0, 0.7])
    assert np.allclose(tables._radon_spline(s), radon(attenuation, s, phi, 1e-3), atol=1e-4)
    assert np.allclose(tables.h(z), direct_h(attenuation, z, phi, RADON_STEP), atol=1e-4)


def test_vanishing_attenuation_gives_vanishing_h():
    tables = LineTables(constant_attenuation_with_cutoff(1e-14), 0.3, RADON_STEP)
    assert np.max(np.abs(tables.h(np.array([0.0, 0.5j, -0.7])))) < 1e-10


def test_integrating_factor_solves_transport(attenuation):
    points = np.array([0.0, 0.3 + 0.4j, -0.5 - 0.1j, 0.1 - 0.75j, 0.8])
    assert transport_residual(attenuation, points, 8, RADON_STEP, 4) < 1e-3


def test_pack_mode_diagnostics(pack):
    assert pack.K == 128 and pack.truncation == 24
    assert pack.alpha.shape == (pack.interior_count + 64, 25)
    assert pack.diagnostics["negative_mode_max"] < 1e-5
    assert pack.diagnostics["convolution_gap"] < 1e-5
    assert pack.diagnostics["product_gap"] < 1e-10
    assert pack.diagnostics["discarded_mass_alpha"] < 1e-3
    assert convolution_gap(pack.alpha, pack.beta) == pytest.approx(pack.diagnostics["convolution_gap"])
    assert pack.boundary_factor().shape == (64, 128)
    assert pack.describe()["N"] == 24


def test_pack_mode_recursions(pack):
    report = mode_recursion_residuals(pack)
    assert set(report) == {"alpha_0", "alpha_1", "alpha_k", "beta_0", "beta_1", "beta_k"}
    for value in report.values():
        assert value < 1e-2


def test_pack_on_grid(pack):
    a = pack.a_on_grid()
    assert a.shape == pack.grid.z.shape
    assert np.all(np.isnan(a[~pack.grid.cover]))
    assert np.allclose(a[pack.grid.cover], pack.a_values[:pack.interior_count])
    assert pack.interior_count == np.count_nonzero(pack.grid.cover)
    assert pack.on_boundary(pack.a_values).shape == (64,)


def test_pack_mode_derivatives(pack):
    out = pack.mode_derivatives(pack.a_values, (ORDERS.VALUE, ORDERS.D, ORDERS.DBAR))
    z = pack.grid.z
    inner = np.abs(z) < 0.9
    exact = -0.3 * np.exp(-np.abs(z) ** 2 / 0.25) * np.conj(z) / 0.25
    assert np.allclose(out[ORDERS.VALUE][inner], 0.2 + 0.3 * np.exp(-np.abs(z[inner]) ** 2 / 0.25))
    assert np.allclose(out[ORDERS.D][inner], exact[inner], atol=5e-3)
    assert np.allclose(out[ORDERS.DBAR][inner], np.conj(exact[inner]), atol=5e-3)
    # the outermost cover ring has no complete stencil
    assert np.any(np.isnan(out[ORDERS.D][pack.grid.cover]))


def test_line_tables_reach_the_evaluation_points(attenuation):
    plain = LineTables(attenuation, 0.3, RADON_STEP)
    wide = LineTables(attenuation, 0.3, RADON_STEP, extent=1.5)
    assert plain.grid[-1] < 1.5 <= wide.grid[-1]
    z = np.array([0.2 + 0.1j, -0.4j])
    assert np.allclose(wide.h(z), plain.h(z), atol=1e-6)

def test_u_v_conversions_are_inverse(pack):
    rng = np.random.default_rng(0)
    v = rng.normal(size=(pack.points.size, 6)) + 1j * rng.normal(size=(pack.points.size, 6))
    u, _ = u_from_v(v, pack)
    back, _ = v_from_u(u, pack)
    assert np.max(np.abs(back - v)) < 1e-4
    field = SequenceField(pack.grid, pack.on_grid(v))
    u_field, loss = u_from_v(field, pack)
    assert isinstance(u_field, SequenceField)
    assert np.allclose(u_field.values[pack.grid.cover], u[:pack.interior_count])
    assert loss >= 0.0


def test_u_from_v_zero_and_trivial_attenuation(tiny_grid):
    domain = Domain(radius=1.0, boundary_nodes=16)
    pack = build_pack(constant_attenuation_with_cutoff(1e-14), tiny_grid, domain, 16, 4, radon_step=RADON_STEP)
    v = np.arange(3 * pack.points.size, dtype=complex).reshape(-1, 3)
    u, loss = u_from_v(v, pack)
    assert np.allclose(u, v, atol=1e-10)
    assert loss < 1e-10
    zero, _ = u_from_v(np.zeros_like(v), pack)
    assert np.all(zero == 0)


def test_convolve_modes():
    seq = np.array([[1.0, 2.0, 3.0]])
    out, loss = convolve_modes(seq, np.array([[1.0, 0.5]]))
    assert np.allclose(out, [[2.0, 3.5, 3.0]])
    assert loss == pytest.approx(1.5)


def test_modes_require_resolution(tiny_grid, attenuation):
    domain = Domain(radius=1.0, boundary_nodes=16)
    pack = build_h(attenuation, tiny_grid, domain.zeta, 16, radon_step=RADON_STEP)
    with pytest.raises(ConfigError):
        u_from_v(np.zeros((pack.points.size, 2)), pack)
    with pytest.raises(ConfigError):
        alpha_beta_modes(pack, 8)
    with pytest.raises(ResolutionError):
        alpha_beta_modes(pack, 4, tol_mass=1e-30)


def test_pack_persistence(tmp_path, tiny_grid, attenuation):
    domain = Domain(radius=1.0, boundary_nodes=16)
    pack = build_pack(attenuation, tiny_grid, domain, 16, 4, radon_step=RADON_STEP, tol_mass=1.0)
    path = str(tmp_path / "pack.pkl")
    save_pack(pack, path)
    loaded = load_pack(path, tiny_grid)
    assert np.array_equal(loaded.h, pack.h)
    assert np.array_equal(loaded.alpha, pack.alpha)
    assert loaded.diagnostics == pack.diagnostics
    with pytest.raises(ShapeError):
        load_pack(path, InteriorGrid(1.0, 0.25, 0.3, padding_nodes=3))
    broken = tmp_path / "broken.pkl"
    broken.write_bytes(b"not a pickle")
    with pytest.raises(FileFormatError):
        load_pack(str(broken), tiny_grid)


def test_pack_cache(tmp_path, tiny_grid, attenuation, capsys):
    domain = Domain(radius=1.0, boundary_nodes=16)
    kwargs = dict(radon_step=RADON_STEP, tol_mass=1.0, cache_folder=str(tmp_path))
    first = load_or_build_pack(attenuation, tiny_grid, domain, 16, 4, **kwargs)
    assert "stored" in capsys.readouterr().out
    second = load_or_build_pack(attenuation, tiny_grid, domain, 16, 4, **kwargs)
    assert "Loading cached" in capsys.readouterr().out
    assert np.array_equal(first.h, second.h)
    assert len(list(tmp_path.iterdir())) == 1


def test_pack_cache_key_is_order_independent():
    assert pack_cache_key({"a": 1, "b": [1, 2]}) == pack_cache_key({"b": [1, 2], "a": 1})
    assert pack_cache_key({"a": 1}) != pack_cache_key({"a": 2})
