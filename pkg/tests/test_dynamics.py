"""Propagation semantics, delayed correlations and the cosine-transform spectrum."""

import dataclasses

import numpy as np
import pytest

from bimodal.errors import ConfigError
from bimodal.dynamics import (
    CorrelationSeries,
    TauGrid,
    decay_rate,
    default_omega_grid,
    default_tau_grid,
    g2_bundle,
    g2_correlation,
    hbt_spectrum,
    propagate,
    write_correlation_csv,
    write_spectrum_csv,
)
from bimodal.hilbert import build_space
from bimodal.model import ModelParams, build_liouvillian
from bimodal.observables import equal_time_g2
from bimodal.steady import steady_state


def small_system(fock=3):
    space = build_space(fock, fock)
    liou = build_liouvillian(space, ModelParams())
    rho = steady_state(liou, tol=1e-12).rho_ss
    return space, liou, rho


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# --- grids ---


def test_tau_grid_validation():
    with pytest.raises(ConfigError):
        TauGrid(-1.0, 100)
    with pytest.raises(ConfigError):
        TauGrid(10.0, 1)
    grid = TauGrid(10.0, 101)
    assert grid.spacing == pytest.approx(0.1)
    assert grid.taus[0] == 0.0 and grid.taus[-1] == 10.0


def test_default_grids():
    params = ModelParams()
    assert decay_rate(params) == pytest.approx(2.0)
    grid = default_tau_grid(params)
    assert grid.t_max == pytest.approx(10.0)
    assert grid.n_points == 2048
    taus = np.linspace(0, grid.t_max, grid.n_points)
    series = CorrelationSeries(
        i=1, j=1, taus=taus, g2=np.ones_like(taus), g_inf=1.0,
        params=params, fock=(6, 6), max_imag=0.0,
    )
    omega = default_omega_grid(series)
    # bin width pi/t_max, endpoints on bin multiples covering +-3g
    bin_width = np.pi / grid.t_max
    assert omega[1] - omega[0] == pytest.approx(bin_width)
    assert omega[0] == pytest.approx(-omega[-1])
    assert 30.0 <= omega[-1] <= 30.0 + bin_width


# --- propagation ---


def test_propagate_identity_at_zero(rng):
    space, liou, _ = small_system()
    rho = random_density(rng, space.dim)
    np.testing.assert_allclose(propagate(liou, rho, 0.0), rho, atol=1e-12)


def test_propagate_semigroup(rng):
    space, liou, _ = small_system()
    rho = random_density(rng, space.dim)
    one_hop = propagate(liou, rho, 0.7)
    two_hop = propagate(liou, propagate(liou, rho, 0.3), 0.4)
    np.testing.assert_allclose(one_hop, two_hop, atol=1e-8)


def test_propagate_linearity(rng):
    space, liou, _ = small_system()
    rho_a = random_density(rng, space.dim)
    rho_b = random_density(rng, space.dim)
    mix = 0.3 * rho_a + 0.7 * rho_b
    direct = propagate(liou, mix, 0.5)
    split = 0.3 * propagate(liou, rho_a, 0.5) + 0.7 * propagate(liou, rho_b, 0.5)
    np.testing.assert_allclose(direct, split, atol=1e-8)


def test_propagate_preserves_trace_and_hermiticity(rng):
    space, liou, _ = small_system()
    rho = random_density(rng, space.dim)
    out = propagate(liou, rho, 1.3)
    assert abs(np.trace(out) - 1.0) < 1e-10
    assert np.abs(out - out.conj().T).max() < 1e-10


def test_propagate_converges_to_steady(rng):
    space, liou, rho_ss = small_system()
    rho = random_density(rng, space.dim)
    out = propagate(liou, rho, 50.0)
    assert np.abs(out - rho_ss).max() < 1e-6


# --- correlations ---


def test_g2_tau_zero_matches_equal_time():
    space, liou, rho = small_system(fock=4)
    grid = TauGrid(5.0, 32)
    for i, j in ((1, 1), (1, 2)):
        series = g2_correlation(liou, rho, i, j, grid)
        assert series.g2[0] == pytest.approx(equal_time_g2(space, rho, i, j), abs=1e-8)
        assert series.max_imag < 1e-8


def test_g2_long_delay_factorizes():
    space, liou, rho = small_system(fock=4)
    series = g2_correlation(liou, rho, 1, 1, TauGrid(15.0, 64))
    assert series.g2[-1] == pytest.approx(1.0, abs=1e-3)
    assert series.g_inf == pytest.approx(1.0, abs=1e-3)


def test_g2_bundle_matches_individual_runs():
    space, liou, rho = small_system(fock=3)
    grid = TauGrid(4.0, 16)
    bundle = g2_bundle(liou, rho, 1, (1, 2), grid)
    for j in (1, 2):
        single = g2_correlation(liou, rho, 1, j, grid)
        np.testing.assert_allclose(bundle[j].g2, single.g2, atol=1e-10)


# --- spectrum ---


def damped_cosine_series(gamma_decay, omega0, t_max=20.0, n=2048):
    taus = np.linspace(0.0, t_max, n)
    g2 = 1.0 + np.exp(-gamma_decay * taus) * np.cos(omega0 * taus)
    return CorrelationSeries(
        i=1, j=2, taus=taus, g2=g2, g_inf=1.0,
        params=ModelParams(), fock=(6, 6), max_imag=0.0,
    )


def test_spectrum_of_damped_cosine_matches_lorentzian_pair():
    # F(omega) = 2 int_0^inf e^{-G tau} cos(W tau) cos(omega tau) dtau
    #          = G/(G^2+(omega-W)^2) + G/(G^2+(omega+W)^2)
    gam, om0 = 1.0, 10.0
    series = damped_cosine_series(gam, om0)
    out = hbt_spectrum(series)
    want = gam / (gam**2 + (out.omega - om0) ** 2) + gam / (gam**2 + (out.omega + om0) ** 2)
    np.testing.assert_allclose(out.spectrum, want, atol=1e-2)
    # the peak sits on the oscillation frequency
    peak = abs(out.omega[np.argmax(out.spectrum)])
    assert peak == pytest.approx(om0, abs=np.pi / series.t_max)


def test_spectrum_is_even():
    out = hbt_spectrum(damped_cosine_series(1.0, 7.0))
    sym = out.spectrum[::-1]
    np.testing.assert_allclose(out.spectrum, sym, atol=1e-12)


def test_spectrum_rejects_short_window():
    series = damped_cosine_series(1.0, 10.0, t_max=3.0)
    with pytest.raises(ConfigError):
        hbt_spectrum(series)


def test_spectrum_custom_grid():
    series = damped_cosine_series(1.0, 10.0)
    omega = np.linspace(-5, 5, 11)
    out = hbt_spectrum(series, omega_grid=omega)
    np.testing.assert_allclose(out.omega, omega, atol=0)
    assert out.spectrum.shape == omega.shape


# --- CSV output ---


def test_correlation_csv_roundtrip(tmp_path):
    series = damped_cosine_series(1.0, 10.0, n=64)
    path = tmp_path / "g2.csv"
    write_correlation_csv(series, path)
    text = path.read_text().splitlines()
    preamble = [l for l in text if l.startswith("#")]
    assert any("pair = 11" in l or "pair = 12" in l for l in preamble)
    assert any("g1 = 10.0" in l for l in preamble)
    header_at = len(preamble)
    assert text[header_at] == "tau,g2"
    data = np.loadtxt(path, delimiter=",", skiprows=header_at + 1)
    np.testing.assert_allclose(data[:, 0], series.taus, atol=1e-12)
    np.testing.assert_allclose(data[:, 1], series.g2, atol=1e-12)


def test_spectrum_csv_written_after_transform(tmp_path):
    out = hbt_spectrum(damped_cosine_series(1.0, 10.0))
    path = tmp_path / "spec.csv"
    write_spectrum_csv(out, path)
    lines = path.read_text().splitlines()
    header_at = len([l for l in lines if l.startswith("#")])
    assert lines[header_at] == "omega,F"
    data = np.loadtxt(path, delimiter=",", skiprows=header_at + 1)
    np.testing.assert_allclose(data[:, 0], out.omega, atol=1e-12)
    np.testing.assert_allclose(data[:, 1], out.spectrum, atol=1e-12)


def test_csv_output_is_deterministic(tmp_path):
    series = damped_cosine_series(0.5, 5.0, n=32)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_correlation_csv(series, p1)
    write_correlation_csv(series, p2)
    assert p1.read_bytes() == p2.read_bytes()
