import math

import numpy as np
import pytest
from scipy import integrate

from hybridqm.errors import ConfigurationError
from hybridqm.grid import make_grid
from hybridqm.operators import apply_kinetic, build_operators
from hybridqm.states import (gaussian, log_moment, moments, plane_wave, random_state,
                             two_mode_superposition)
from hybridqm.symbols import HybridParams, kinetic_symbol

EULER_GAMMA = 0.5772156649015329


def test_gaussian_minimum_uncertainty(grid, sqm):
    m = moments(gaussian(grid, 0.0, 0.0, 1.0), sqm)
    assert m.dx * m.dp_std == pytest.approx(0.5, abs=1e-8)
    assert m.p2 == pytest.approx(0.25, abs=1e-8)


def test_gaussian_higher_moments(grid, sqm):
    m = moments(gaussian(grid, 0.0, 0.0, 1.0), sqm)
    assert m.p4 == pytest.approx(3 * m.var_p_std ** 2, rel=1e-6)
    assert m.p6 == pytest.approx(15 * m.var_p_std ** 3, rel=1e-5)


def test_gaussian_is_normalised_and_centred(grid):
    psi = gaussian(grid, 2.0, 1.5, 1.2)
    m = moments(psi, HybridParams(1.3, 1.7))
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert m.mean_x == pytest.approx(2.0, abs=1e-10)
    assert m.mean_p_std == pytest.approx(1.5, abs=1e-10)


@pytest.mark.parametrize("sigma", [0.01, 100.0])
def test_gaussian_width_preconditions(grid, sigma):
    with pytest.raises(ConfigurationError) as e:
        gaussian(grid, 0.0, 0.0, sigma)
    assert e.value.field == "state.sigma"


def test_two_mode_bins(grid):
    k1, k2 = 3 * grid.dk, -5 * grid.dk
    psi = two_mode_superposition(grid, k1, k2, 0.4)
    a = np.abs(psi.values_k)
    nz = np.nonzero(a > 1e-12 * a.max())[0]
    assert len(nz) == 2
    assert a[nz[0]] == pytest.approx(a[nz[1]], rel=1e-12)


def test_two_mode_energy_statistics():
    g = make_grid(512, -40.0, 40.0)
    p = HybridParams(1.25, 1.8)
    ops = build_operators(p, g)
    k1, k2 = 4 * g.dk, 11 * g.dk
    psi = two_mode_superposition(g, k1, k2, 0.0)
    e1, e2 = float(kinetic_symbol(p, k1)), float(kinetic_symbol(p, k2))
    kf = apply_kinetic(ops, psi.field).values_x
    mean = g.inner(psi.values_x, kf).real
    var = g.inner(kf, kf).real - mean ** 2
    assert mean == pytest.approx((e1 + e2) / 2, rel=1e-12)
    assert math.sqrt(var) == pytest.approx(abs(e1 - e2) / 2, rel=1e-8)


def test_two_mode_rejects_non_modes(grid):
    with pytest.raises(ConfigurationError):
        two_mode_superposition(grid, 0.5 * grid.dk, 2 * grid.dk)
    with pytest.raises(ConfigurationError):
        two_mode_superposition(grid, 2 * grid.dk, 2 * grid.dk)


def test_plane_wave_single_bin(grid):
    psi = plane_wave(grid, 6 * grid.dk)
    assert np.count_nonzero(np.abs(psi.values_k) > 1e-10) == 1


def test_hybrid_mean_vanishes_for_even_density(grid):
    m = moments(gaussian(grid, 1.0, 0.0, 1.0), HybridParams(1.6, 1.5))
    assert abs(m.mean_p_hybrid) < 1e-14


def test_log_moment_closed_form(grid):
    # k ~ N(0, s^2) with s = 1/(2 sigma): <ln|k|> = ln s - (gamma + ln 2)/2
    sigma = 1.0
    psi = gaussian(grid, 0.0, 0.0, sigma)
    val, _ = log_moment(psi, 1.0, 1.0)
    s = 1 / (2 * sigma)
    assert val == pytest.approx(math.log(s) - 0.5 * (EULER_GAMMA + math.log(2)), abs=1e-5)


def test_log_moment_fine_quadrature(grid):
    sigma = 1.3
    psi = gaussian(grid, 0.0, 0.7, sigma)
    dens = lambda k: math.sqrt(2 / math.pi) * sigma * math.exp(-2 * sigma ** 2 * (k - 0.7) ** 2)
    ref = sum(integrate.quad(lambda k: dens(k) * math.log(abs(k) / 0.5), a, b, limit=200, points=pts)[0]
              for a, b, pts in ((-12, 0, None), (0, 12, None)))
    val, _ = log_moment(psi, 1.0, 0.5)
    assert val == pytest.approx(ref, abs=1e-4)


def test_log_reliability_flag():
    g = make_grid(256, -10.0, 10.0)
    psi = gaussian(g, 0.0, 0.0, 2.4)  # narrow in k: heavy k = 0 bin
    assert not moments(psi, HybridParams(1.2, 1.8)).log_reliable


def test_default_p_ref(grid):
    m = moments(gaussian(grid, 0.0, 0.0, 1.0), HybridParams(1.2, 1.8))
    assert m.p_ref == pytest.approx(1.0 / m.dx, rel=1e-12)


def test_random_state_is_normalised_and_reproducible(grid):
    a = random_state(grid, np.random.default_rng(5))
    b = random_state(grid, np.random.default_rng(5))
    assert a.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(a.values_x, b.values_x)
