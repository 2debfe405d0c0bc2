import math

import numpy as np
import pytest

from hybridqm.dynamics import (EvolutionConfig, autocorr_model, ehrenfest_check, energy_decomposition,
                               evolve, fit_autocorrelation, ml_gaussian_prediction,
                               momentum_force_check, propagator_slice, qsl_report,
                               strang_error_ratio, tail_slope)
from hybridqm.errors import ConfigurationError, NumericalAbort
from hybridqm.grid import make_grid
from hybridqm.operators import build_operators, harmonic, quartic
from hybridqm.states import gaussian, plane_wave, two_mode_superposition
from hybridqm.symbols import HybridParams, kinetic_symbol

from conftest import SQM_Q


@pytest.mark.parametrize("kw", [dict(dt=0.0, n_steps=1), dict(dt=0.1, n_steps=0),
                                dict(dt=0.1, n_steps=5, record_every=0),
                                dict(dt=0.1, n_steps=5, splitting="lie")])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError) as e:
        EvolutionConfig(**kw)
    assert e.value.field.startswith("evolution.")


def test_initial_record(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    psi = gaussian(grid, 1.0, 0.5, 1.0)
    tr = evolve(psi, ops, quartic(grid, 0.1), EvolutionConfig(0.01, 10, 5))
    assert tr.times[0] == 0.0 and tr.fidelity[0] == pytest.approx(1.0, abs=1e-14)
    assert tr.mean_x[0] == pytest.approx(1.0, abs=1e-10)
    assert len(tr.times) == 3


def test_plane_wave_is_stationary(grid):
    p = HybridParams(1.3, 1.7)
    ops = build_operators(p, grid)
    k = 5 * grid.dk
    psi = plane_wave(grid, k)
    tr = evolve(psi, ops, None, EvolutionConfig(0.5, 20, 1, "exact_free"))
    assert np.allclose(tr.fidelity, 1.0, atol=1e-12)
    phase = np.vdot(psi.values_x, tr.final_state.values_x) * grid.dx
    assert phase == pytest.approx(np.exp(-1j * float(kinetic_symbol(p, k)) * 10.0), abs=1e-10)


def test_sqm_free_spreading():
    g = make_grid(2048, -60.0, 60.0)
    ops = build_operators(HybridParams(SQM_Q, 2.0), g)
    tr = evolve(gaussian(g, 0.0, 0.0, 1.0), ops, None, EvolutionConfig(0.5, 10, 1, "exact_free"))
    expected = 1.0 + (tr.times / 2.0) ** 2
    assert np.allclose(tr.var_x, expected, rtol=1e-4)


def test_strang_second_order(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    _, _, ratio = strang_error_ratio(gaussian(grid, -1.0, 1.0, 1.0), ops, quartic(grid, 0.1), 1.0, 0.02)
    assert 3.5 <= ratio <= 4.5


def test_norm_drift_aborts(grid, monkeypatch):
    monkeypatch.setenv("HYBRIDQM_FAULT", "kinetic_asymmetry")
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    with pytest.raises(NumericalAbort):
        evolve(gaussian(grid, 0.0, 1.0, 1.0), ops, None, EvolutionConfig(0.05, 50))


def test_two_mode_saturates_mt():
    g = make_grid(512, -40.0, 40.0)
    p = HybridParams(1.2, 1.9)
    ops = build_operators(p, g)
    k1, k2 = 3 * g.dk, 10 * g.dk
    psi = two_mode_superposition(g, k1, k2, 0.3)
    de = abs(float(kinetic_symbol(p, k1) - kinetic_symbol(p, k2)))
    T = math.pi / de
    tr = evolve(psi, ops, None, EvolutionConfig(T / 200, 300, 1, "exact_free"))
    rep = qsl_report(psi, ops, None, tr)
    assert rep.t_perp_measured == pytest.approx(T, rel=1e-6)
    assert rep.mt_bound == pytest.approx(math.pi / (2 * de / 2), rel=1e-12)
    assert rep.t_perp_measured / rep.mt_bound == pytest.approx(1.0, abs=1e-6)
    assert rep.mt_integral_ok
    assert rep.var_V == 0.0 and rep.cov_KV == 0.0
    assert rep.delta_H == pytest.approx(math.sqrt(rep.var_K), rel=1e-15)


def test_mt_integral_with_potential(grid):
    ops = build_operators(HybridParams(1.4, 1.6), grid)
    psi = gaussian(grid, 1.0, 0.0, 1.0)
    V = harmonic(grid, 0.7)
    tr = evolve(psi, ops, V, EvolutionConfig(0.01, 400, 4))
    rep = qsl_report(psi, ops, V, tr)
    assert rep.mt_integral_ok
    d = energy_decomposition(psi, ops, V)
    assert rep.delta_H == pytest.approx(math.sqrt(d["var_H"]), rel=1e-8)


def test_ml_closed_form():
    assert ml_gaussian_prediction(HybridParams(1 + 1e-9, 2.0), 1.0) == pytest.approx(math.pi, rel=1e-10)
    assert ml_gaussian_prediction(HybridParams(math.exp(0.2), 2.0), 1.0) == pytest.approx(
        math.pi * (1 + 0.04 / 24), rel=1e-12)
    assert ml_gaussian_prediction(HybridParams(math.exp(0.2), 2.0), 1.0) == pytest.approx(3.14683, abs=1e-5)


def test_ehrenfest_sqm_boost():
    g = make_grid(1024, -60.0, 60.0)
    ops = build_operators(HybridParams(SQM_Q, 2.0), g)
    tr = evolve(gaussian(g, -10.0, 1.0, 2.0), ops, None, EvolutionConfig(0.05, 200, 1, "exact_free"))
    assert np.allclose(np.diff(tr.mean_x) / 0.05, 1.0, atol=1e-5)
    assert ehrenfest_check(tr).max_residual <= 1e-5


def test_ehrenfest_stationary(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    tr = evolve(plane_wave(grid, 0.0), ops, None, EvolutionConfig(0.1, 20, 1, "exact_free"))
    assert np.ptp(tr.mean_x) <= 1e-12 and np.max(np.abs(tr.mean_vg)) == 0.0
    assert ehrenfest_check(tr).passed


def test_ehrenfest_hybrid_quartic(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    tr = evolve(gaussian(grid, -1.0, 1.0, 1.0), ops, quartic(grid, 0.1), EvolutionConfig(1e-3, 1000))
    assert ehrenfest_check(tr).max_residual <= 1e-3
    assert momentum_force_check(tr).max_residual <= 1e-3


def test_hybrid_momentum_conserved_when_free(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    tr = evolve(gaussian(grid, 0.0, 1.0, 1.0), ops, None, EvolutionConfig(0.1, 50, 1, "exact_free"))
    assert np.ptp(tr.mean_p_hybrid) <= 1e-8


def test_sqm_harmonic_force(grid, sqm):
    ops = build_operators(sqm, grid)
    tr = evolve(gaussian(grid, 1.5, 0.0, 1.0), ops, harmonic(grid, 1.0), EvolutionConfig(1e-3, 500, 10))
    assert np.allclose(tr.mean_force, -tr.mean_x, atol=1e-4)


def test_propagator_t0_is_delta(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    g0 = propagator_slice(ops, 0.0, 100)
    assert g0[100] == 1 / grid.dx and np.count_nonzero(g0) == 1


def test_propagator_sqm_gaussian_source():
    g = make_grid(2048, -60.0, 60.0)
    ops = build_operators(HybridParams(SQM_Q, 2.0), g)
    w, t, c = 0.5, 2.0, g.n_points // 2
    out = propagator_slice(ops, t, c, source_width=w)
    x = g.x - g.x[c]
    exact = np.exp(-x ** 2 / (2 * (w * w + 1j * t))) / np.sqrt(2 * np.pi * (w * w + 1j * t))
    window = np.abs(x) < 20
    assert np.allclose(np.abs(out[window]), np.abs(exact[window]), rtol=1e-3, atol=1e-10)


def test_levy_tail_slope():
    g = make_grid(4096, -200.0, 200.0)
    ops = build_operators(HybridParams(SQM_Q, 1.5), g)
    c = g.n_points // 2
    out = propagator_slice(ops, 1.0, c, source_width=0.25)
    assert tail_slope(g.x - g.x[c], np.abs(out), 6.0, 60.0) == pytest.approx(-2.5, abs=0.1)


def test_propagator_rejects_index(grid):
    with pytest.raises(IndexError):
        propagator_slice(build_operators(HybridParams(1.3, 1.7), grid), 1.0, grid.n_points)


def test_fit_round_trip():
    t = np.linspace(0, 10, 500)
    fit = fit_autocorrelation(t, autocorr_model(t, 0.1, 1.5, 0.2, 3.0))
    for got, want in zip((fit.gamma, fit.alpha_fit, fit.c_q, fit.omega_q), (0.1, 1.5, 0.2, 3.0)):
        assert got == pytest.approx(want, rel=0.01)
    assert not fit.flags


def test_fit_unidentifiable_omega():
    t = np.linspace(0, 10, 500)
    fit = fit_autocorrelation(t, np.exp(-0.1 * t ** 1.5))
    assert "omega_unidentifiable" in fit.flags
    assert fit.gamma == pytest.approx(0.1, rel=0.01)
    assert fit.alpha_fit == pytest.approx(1.5, rel=0.01)


def test_fit_degenerate():
    t = np.linspace(0, 10, 100)
    assert "degenerate" in fit_autocorrelation(t, np.ones_like(t)).flags


def test_evolution_deterministic(grid):
    ops = build_operators(HybridParams(1.3, 1.7), grid)
    cfg = EvolutionConfig(0.01, 100, 10)
    a = evolve(gaussian(grid, 0.0, 1.0, 1.0), ops, quartic(grid, 0.1), cfg)
    b = evolve(gaussian(grid, 0.0, 1.0, 1.0), ops, quartic(grid, 0.1), cfg)
    assert a.csv_rows() == b.csv_rows()
