import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridqm.errors import ConfigurationError
from hybridqm.grid import make_grid
from hybridqm.operators import build_operators
from hybridqm.states import MomentSet, gaussian, moments
from hybridqm.symbols import HybridParams
from hybridqm.uncertainty import (VARIANTS, RegimeWarning, bound_series, energy_position_bound,
                                  energy_time_bound, eps2_arbitration, exact_bound, expanded_bound,
                                  limiting_case_suite, metrology_correction, minimal_length_scan,
                                  reference_shift, robertson_bound)

from conftest import SQM_Q


def _moments(p2=1.0, p4=None, log_p=0.0, log_w=0.0):
    return MomentSet(mean_x=0.0, var_x=1.0, mean_p_std=0.0, var_p_std=p2, p2=p2,
                     p4=3 * p2 ** 2 if p4 is None else p4, p6=15 * p2 ** 3, mean_p_hybrid=0.0,
                     var_p_hybrid=p2, log_p=log_p, log_p_weighted=log_w, p_ref=1.0)


def test_sqm_saturation(grid, sqm):
    rep = exact_bound(gaussian(grid, 0.0, 0.0, 1.0), build_operators(sqm, grid))
    assert rep.product == pytest.approx(0.5, abs=1e-6)
    assert rep.exact_bound == pytest.approx(0.5, abs=1e-6)


def test_alpha_two_small_spread():
    g = make_grid(1024, -60.0, 60.0)
    p = HybridParams(1.2, 2.0)
    psi = gaussian(g, 0.0, 0.0, 3.0)
    rep = exact_bound(psi, build_operators(p, g))
    dp2 = moments(psi, p).var_p_std
    assert rep.exact_bound == pytest.approx(0.5 * (1 - dp2 * p.eps() ** 2 / 8), rel=1e-5)
    # exact Gaussian average of the cosine
    assert rep.exact_bound == pytest.approx(0.5 * math.exp(-dp2 * p.eps() ** 2 / 8), rel=1e-12)


def test_robertson_bound_holds_on_random_gaussians(rng):
    g = make_grid(1024, -30.0, 30.0)
    for _ in range(40):
        q = float(rng.choice([rng.uniform(0.3, 0.95), rng.uniform(1.05, 2.0)]))
        a = float(rng.uniform(1.1, 2.0))
        ops = build_operators(HybridParams(q, a), g)
        psi = gaussian(g, rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(0.5, 2.0))
        rep = exact_bound(psi, ops)
        assert rep.robertson_slack >= -1e-9
        assert rep.robertson_bound == pytest.approx(robertson_bound(psi, ops), rel=1e-14)


def test_series_undeformed():
    m = _moments(p2=2.0, log_p=0.7)
    for v in VARIANTS:
        assert bound_series(0.0, 0.0, 1.0, m, v) == 0.5


def test_series_variants_diverge():
    m = _moments(p2=1.0)
    assert bound_series(0.1, 0.0, 1.0, m, "stated") == pytest.approx(0.5 * (1 + 0.01 / 12), rel=1e-14)
    assert bound_series(0.1, 0.0, 1.0, m, "derived") == pytest.approx(0.499375, rel=1e-14)


def test_series_log_zeroing():
    m = _moments(log_p=0.0)
    for v in VARIANTS:
        assert bound_series(0.0, 0.1, 1.0, m, v) == 0.5


def test_series_unknown_variant():
    with pytest.raises(ConfigurationError):
        bound_series(0.1, 0.0, 1.0, _moments(), "other")


def test_expanded_bound_regime_warning():
    with pytest.warns(RegimeWarning):
        expanded_bound(_moments(), HybridParams(3.0, 2.0))


def test_report_carries_both_variants(grid):
    rep = exact_bound(gaussian(grid, 0, 0, 1.0), build_operators(HybridParams(1.1, 1.9), grid))
    assert set(rep.expanded) == set(VARIANTS)
    assert rep.as_dict()["expanded"] == rep.expanded


def test_energy_time_boosted_sqm(grid, sqm):
    k0 = 1.5
    b = energy_time_bound(gaussian(grid, 0.0, k0, 1.0), build_operators(sqm, grid))
    assert b == pytest.approx(1.0 / (2 * k0), rel=1e-6)


def test_energy_time_rejects_rest(grid):
    with pytest.raises(ConfigurationError):
        energy_time_bound(gaussian(grid, 0.0, 0.0, 1.0), build_operators(HybridParams(1.2, 1.8), grid))


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 2.0), st.floats(1.2, 2.0), st.floats(0.2, 1.5))
def test_energy_time_positive(q, a, k0):
    g = make_grid(512, -25.0, 25.0)
    assert energy_time_bound(gaussian(g, 0.0, k0, 1.0), build_operators(HybridParams(q, a), g)) > 0


def test_energy_position_sqm(grid, sqm):
    r = energy_position_bound(gaussian(grid, 0.0, 1.0, 1.0), build_operators(sqm, grid))
    assert r.lhs >= r.rhs_robertson - 1e-9
    assert r.rhs_stated == pytest.approx(r.rhs_robertson, rel=1e-6)


def test_metrology():
    assert metrology_correction(_moments(), HybridParams(1.0 + 1e-10, 2.0)) == pytest.approx(1.0, abs=1e-12)
    m = _moments(p2=1.0)
    assert metrology_correction(m, HybridParams(math.exp(0.1), 2.0)) == pytest.approx(1 / 0.995, rel=1e-12)
    assert metrology_correction(_moments(log_w=0.0), HybridParams(1.0 + 1e-10, 1.9)) == pytest.approx(1.0, abs=1e-9)


def test_arbitration_picks_derived_coefficient():
    r = eps2_arbitration()
    assert r.coefficient == pytest.approx(-0.125, abs=1e-4)
    assert r.matches == ("derived",)


def test_reference_shift():
    g = make_grid(1024, -30.0, 30.0)
    ops = build_operators(HybridParams(1.1, 1.9), g)
    s = reference_shift(gaussian(g, 0.0, 0.0, 1.0), ops, 1.0, 2.0)
    assert s.exact_change == 0.0
    for v in VARIANTS:
        assert s.expanded_change[v] == pytest.approx(s.predicted_change[v], rel=1e-9)


def test_minimal_length_slope():
    r = minimal_length_scan()
    assert 0.4 <= r.slope <= 0.6
    assert list(r.dx_min) == sorted(r.dx_min)


def test_limiting_cases_pass():
    cases = limiting_case_suite()
    assert [c.case for c in cases] == ["a", "b", "c", "d"]
    assert all(c.passed for c in cases), [c.detail for c in cases if not c.passed]
