"""Acceptance criteria 1-16 plus the end-to-end selftest (17).

Each test prints one ``criterion N: PASS|FAIL`` line and asserts against
the pinned tolerance using the metrics recorded by the criterion.
"""
import subprocess
import sys
import time

import pytest

from hybridqm import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in acceptance.run()}


def _report(r, ok):
    line = f"criterion {r.number:2d} ({r.name}): {'PASS' if ok else 'FAIL'}  {r.detail}"
    print("\n" + line)
    ACCEPTANCE_LINES.append(line)
    return ok


def test_criterion_01_sqm_recovery(results):
    r = results[1]
    m = r.metrics
    ok = m["product_error"] <= 1e-5 and m["bound_error"] <= 1e-5 and m["spread_error"] <= 1e-4
    assert _report(r, ok and r.passed)


def test_criterion_02_spectrum_bound(results):
    r = results[2]
    ok = r.metrics["min_mean_k"] >= 0.0 and r.metrics["max_excess"] <= 1e-12
    assert _report(r, ok and r.passed)


def test_criterion_03_hermiticity(results):
    r = results[3]
    ok = bool(r.metrics) and max(r.metrics.values()) <= 1e-11
    assert _report(r, ok and r.passed)


def test_criterion_04_commutator_identity(results):
    r = results[4]
    errs = r.metrics["errors"]
    ok = all(v <= (1e-6 if float(key.split(",")[1]) == 2.0 else 1e-4) for key, v in errs.items())
    assert _report(r, ok and r.passed)


def test_criterion_05_uncertainty_sweep(results):
    r = results[5]
    ok = r.metrics["min_slack"] >= -1e-9
    assert _report(r, ok and r.passed)


def test_criterion_06_expansion_arbitration(results):
    r = results[6]
    ok = len(r.metrics["matches"]) == 1
    assert _report(r, ok and r.passed)


def test_criterion_07_mt_saturation(results):
    r = results[7]
    ok = r.metrics.get("max_ratio_error", 1.0) <= 1e-6
    assert _report(r, ok and r.passed)


def test_criterion_08_mt_integral(results):
    r = results[8]
    ok = r.metrics.get("failed") == []
    assert _report(r, ok and r.passed)


def test_criterion_09_ml_consistency(results):
    r = results[9]
    ok = r.metrics["max_excess"] <= 0.0 and r.metrics["prediction_error"] <= 1e-12
    assert _report(r, ok and r.passed)


def test_criterion_10_ehrenfest(results):
    r = results[10]
    ok = r.metrics["x_residual"] <= 1e-3 and r.metrics["p_residual"] <= 1e-3
    assert _report(r, ok and r.passed)


def test_criterion_11_strang(results):
    r = results[11]
    m = r.metrics
    ok = 3.5 <= m["ratio"] <= 4.5 and m["norm_drift"] <= 1e-9 and m["energy_drift"] <= 1e-8
    assert _report(r, ok and r.passed)


def test_criterion_12_levy_tail(results):
    r = results[12]
    ok = abs(r.metrics["slope"] - (-2.5)) <= 0.3
    assert _report(r, ok and r.passed)


def test_criterion_13_autocorr_fit(results):
    r = results[13]
    ok = max(r.metrics["errors"].values()) <= 0.01
    assert _report(r, ok and r.passed)


def test_criterion_14_minimal_length(results):
    r = results[14]
    ok = 0.4 <= r.metrics["slope"] <= 0.6
    assert _report(r, ok and r.passed)


def test_criterion_15_gaussian_moments(results):
    r = results[15]
    ok = r.metrics["p4_error"] <= 1e-6 and r.metrics["p6_error"] <= 1e-5
    assert _report(r, ok and r.passed)


def test_criterion_16_semigroup(results):
    r = results[16]
    ok = r.metrics["positive"] <= 1e-10 and r.metrics["near_undeformed"] <= 1e-6
    assert _report(r, ok and r.passed)


def test_criterion_17_selftest_cli():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "hybridqm.cli", "selftest"],
                          capture_output=True, text=True, timeout=900)
    elapsed = time.perf_counter() - t0
    ok = proc.returncode == 0 and elapsed <= 600.0
    line = (f"criterion 17 (selftest CLI): {'PASS' if ok else 'FAIL'}  "
            f"exit={proc.returncode}, runtime={elapsed:.1f} s")
    print("\n" + line)
    ACCEPTANCE_LINES.append(line)
    print(proc.stdout)
    assert ok
