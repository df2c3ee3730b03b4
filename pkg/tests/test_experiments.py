import json
import math

import numpy as np
import pytest

from optcurve.errors import PreconditionError
from optcurve.experiments import (
    CHECKS,
    EtaMode,
    eta_scan,
    fuzz_convexity,
    fuzz_trial,
    reproduce_counterexample,
    run_length_histogram,
    verify_theorem_suite,
)
from optcurve.function_zoo import huber_counterexample, make_counterexample, paper_square, quadratic

# --- counterexample


def test_counterexample_eta_1_9():
    rec = reproduce_counterexample(1.9)
    assert rec.x == pytest.approx([-1.8, 1.62, -0.28], abs=1e-12)
    assert rec.f == pytest.approx([1.62, 1.12, 0.0392], abs=1e-12)
    assert rec.violated
    assert rec.quadratic_lhs == pytest.approx(-1.815, abs=1e-12)


def test_counterexample_eta_1_8():
    rec = reproduce_counterexample(1.8)
    assert rec.x == pytest.approx([-1.8, 1.44, -0.36], abs=1e-12)
    assert rec.f == pytest.approx([1.62, 0.94, 0.0648], abs=1e-12)
    assert rec.violated


def test_counterexample_near_boundary():
    rec = reproduce_counterexample(1.76)
    assert rec.violated
    assert rec.x[1] == pytest.approx(1.368, abs=1e-12)
    assert rec.x[1] > 1.35


@pytest.mark.parametrize("eta", np.linspace(1.75, 2.0, 22)[1:-1])
def test_counterexample_agrees_with_quadratic(eta):
    rec = reproduce_counterexample(eta)
    q = eta**2 - 15.75 * eta + 24.5
    assert rec.violated == (q < 0) == True  # noqa: E712
    # second difference closed form
    sd = rec.f[0] - 2 * rec.f[1] + rec.f[2]
    assert sd == pytest.approx(0.32 * q, abs=1e-12)


@pytest.mark.parametrize("eta", [1.75, 2.0, 1.0, 2.5])
def test_counterexample_precondition(eta):
    with pytest.raises(PreconditionError):
        reproduce_counterexample(eta)


# --- eta scan


def test_scan_huber_regime_split():
    res = eta_scan(huber_counterexample(), [-1.8], grid_size=50, steps=10)
    for eta, v in zip(res.eta_grid, res.verdicts):
        if eta <= 1.75:
            assert v.convex, eta
        else:
            assert not v.convex and v.first_violation_step == 0, eta
            assert v.monotone
    assert abs(res.empirical_threshold - 1.75) <= res.grid_resolution
    assert abs(res.empirical_threshold - 1.75) <= 1e-6
    assert res.empirical_threshold >= res.theoretical_threshold - res.grid_resolution


def test_scan_square_all_convex():
    res = eta_scan(paper_square(), [3.0], grid_size=50, steps=50)
    assert all(v.convex for v in res.verdicts)
    assert res.empirical_threshold == 1.0
    grid = np.array(res.eta_grid)
    assert np.all(np.diff(grid) > 0) and grid[0] > 0 and grid[-1] < 1.0


def test_scan_square_brute_force():
    # curve is 9 (1 - 2 eta)^(2n): differences decay geometrically for |1 - 2 eta| < 1
    res = eta_scan(paper_square(), [3.0], grid_size=20, steps=50)
    for eta, v in zip(res.eta_grid, res.verdicts):
        r = (1 - 2 * eta) ** 2
        a = 9 * r ** np.arange(51)
        assert np.all(a[:-2] - 2 * a[1:-1] + a[2:] >= -1e-12)
        assert v.convex


def test_scan_stationary_start():
    res = eta_scan(huber_counterexample(), [0.0], grid_size=20, steps=10)
    assert all(v.convex for v in res.verdicts)


def test_scan_rescaling_patterns():
    base = eta_scan(huber_counterexample(), [-1.8], grid_size=50, steps=10)
    for L in (0.25, 4.0, 16.0):
        res = eta_scan(make_counterexample(L), [-1.8 / math.sqrt(L)], grid_size=50, steps=10)
        assert res.pattern() == base.pattern()
        assert np.allclose(np.array(res.eta_grid) * L, base.eta_grid, rtol=1e-14)
        assert res.empirical_threshold * L == pytest.approx(1.75, abs=1e-6)


def test_scan_range_and_csv(tmp_path):
    res = eta_scan(huber_counterexample(), [-1.8], grid_size=5, steps=10, eta_range=(1.5, 1.9))
    assert res.eta_grid[0] == 1.5 and res.eta_grid[-1] == 1.9
    path = res.to_csv(tmp_path / "scan.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "eta,convex,monotone,grad_monotone,first_violation"
    assert lines[1] == "1.5,true,true,true,"
    assert lines[-1] == "1.9,false,true,true,0"
    summary = json.loads((tmp_path / "scan.json").read_text())
    assert summary["function_id"] == "huber_l=1"


def test_scan_range_precondition():
    with pytest.raises(PreconditionError):
        eta_scan(huber_counterexample(), [-1.8], eta_range=(1.5, 2.0))


# --- theorem suite


def test_verify_smoke_square():
    s = verify_theorem_suite(0, 1, functions=[paper_square()])
    assert s.passed and s.summary_line() == "6/6 theorem checks passed"


def test_verify_zero_trials():
    with pytest.raises(PreconditionError):
        verify_theorem_suite(42, 0)


def test_verify_small_batch():
    s = verify_theorem_suite(3, 20)
    assert s.counts == {c: 20 for c in CHECKS}
    assert s.failures == []


def test_verify_reports_failures():
    # a "convex" objective whose declared L is too small breaks the safe-regime guarantee
    bad = quadratic([[1.0]])
    object.__setattr__(bad, "smoothness_L", 0.5)
    s = verify_theorem_suite(1, 2, functions=[bad])
    assert not s.passed
    assert {f["theorem"] for f in s.failures} & set(CHECKS)
    assert all({"theorem", "function_id", "eta", "seed"} <= set(f) for f in s.failures)


@pytest.mark.slow
def test_verify_seed_42():
    s = verify_theorem_suite(42, 100)
    assert s.passed, s.failures


# --- fuzzing


def test_fuzz_safe_quadratics_empty():
    assert fuzz_convexity(0, 1, EtaMode.SAFE, family="quadrand") == []


def test_fuzz_safe_pq1d_empty():
    assert fuzz_convexity(0, 1000, "SafeRegime", family="pq1d") == []


def test_fuzz_danger_huber_finds_violations():
    found = fuzz_convexity(0, 200, EtaMode.DANGER, family="huber")
    assert found
    for rec in found:
        assert rec["monotone"]
        assert 1.75 < rec["eta_times_L"] < 2.0
        assert rec["max_run"] >= 1 and rec["worst_magnitude"] < 0


def test_fuzz_danger_quadratics_negative_control():
    assert fuzz_convexity(5, 200, EtaMode.DANGER, family="quadrand") == []


def test_fuzz_danger_violations_monotone():
    found = fuzz_convexity(1, 500, EtaMode.DANGER, family="pq1d")
    assert all(r["monotone"] for r in found)
    hist = run_length_histogram(found)
    assert sum(hist.values()) == sum(len(r["runs"]) for r in found)


def test_fuzz_deterministic_across_workers():
    a = fuzz_convexity(9, 300, EtaMode.DANGER, family="huber", workers=1)
    b = fuzz_convexity(9, 300, EtaMode.DANGER, family="huber", workers=3)
    assert json.dumps(a) == json.dumps(b)


def test_fuzz_trial_is_pure():
    assert fuzz_trial(4, 17, EtaMode.DANGER, "huber") == fuzz_trial(4, 17, EtaMode.DANGER, "huber")


def test_fuzz_rejects_bad_args():
    with pytest.raises(PreconditionError):
        fuzz_convexity(0, 0, EtaMode.SAFE)
    with pytest.raises(KeyError):
        fuzz_convexity(0, 1, EtaMode.SAFE, family="lse")
    with pytest.raises(ValueError):
        fuzz_convexity(0, 1, "Sometimes")
