"""Packaged experiments: the counterexample, step-size scans, the theorem suite, fuzzing.

Randomized experiments derive trial ``i``'s generator from ``(seed, i)``, so
results do not depend on worker count or execution order.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _io
from .analysis import (
    analyze_trajectory,
    continuous_curve_convexity,
    gradient_norm_monotone,
    is_convex_sequence,
    monotone_non_increasing,
)
from .descent import gd_run
from .errors import DivergenceError, PreconditionError, UnsupportedError
from .flow import euler_error_bound, euler_path, euler_sup_error, euler_values, reference_flow
from .function_zoo import (
    huber_counterexample,
    make_counterexample,
    paper_square,
    random_convex_1d,
    random_log_sum_exp,
    random_quadratic,
    as_point,
)

CONVEX_LIMIT = 1.75  # times 1/L
STABLE_LIMIT = 2.0  # times 1/L
COUNTEREXAMPLE_X0 = -1.8


def trial_rng(seed, i):
    return np.random.default_rng([int(seed), int(i)])


# ---------------------------------------------------------------------------
# counterexample


@dataclass
class CounterexampleRecord:
    eta: float
    x: list
    f: list
    violated: bool
    quadratic_lhs: float

    def to_dict(self):
        return asdict(self)


def reproduce_counterexample(eta):
    """Two GD steps on the Huber-type function from x0 = -1.8 with eta in (1.75, 2).

    ``violated`` is read off the computed values (f0 - f1 < f1 - f2);
    ``quadratic_lhs`` is eta^2 - 15.75 eta + 24.5, whose sign must agree.
    """
    if not 1.75 < eta < 2.0:
        raise PreconditionError(f"eta must lie in (1.75, 2), got {eta}")
    f = huber_counterexample()
    traj = gd_run(f, COUNTEREXAMPLE_X0, eta, 2)
    f0, f1, f2 = (float(v) for v in traj.values)
    violated = (f0 - f1) < (f1 - f2)
    q = eta * eta - 15.75 * eta + 24.5
    # the second difference equals 0.32 * q; only compare signs away from round-off
    if violated != (q < 0) and abs(q) > 1e-9:
        raise AssertionError(f"computed verdict {violated} disagrees with sign of {q} at eta={eta}")
    return CounterexampleRecord(float(eta), [float(x) for x in traj.points[:, 0]], [f0, f1, f2], violated, q)


# ---------------------------------------------------------------------------
# step-size scan


@dataclass
class EtaVerdict:
    eta: float
    convex: bool
    monotone: bool
    grad_monotone: bool
    first_violation_step: Optional[int]
    divergent: bool = False


@dataclass
class RegimeScanResult:
    eta_grid: list
    verdicts: list
    empirical_threshold: float
    theoretical_threshold: float
    function_id: str
    x0: list
    steps: int
    L: float

    @property
    def grid_resolution(self):
        g = self.eta_grid
        return g[1] - g[0] if len(g) > 1 else 0.0

    def pattern(self):
        return [(v.convex, v.monotone, v.grad_monotone, v.first_violation_step, v.divergent) for v in self.verdicts]

    def summary(self):
        return {
            "function_id": self.function_id,
            "L": self.L,
            "x0": self.x0,
            "steps": self.steps,
            "grid_size": len(self.eta_grid),
            "empirical_threshold": self.empirical_threshold,
            "theoretical_threshold": self.theoretical_threshold,
            "empirical_threshold_times_L": self.empirical_threshold * self.L,
            "convex_count": sum(v.convex for v in self.verdicts),
            "divergent_etas": [v.eta for v in self.verdicts if v.divergent],
        }

    def to_csv(self, path):
        rows = [(v.eta, v.convex, v.monotone, v.grad_monotone, v.first_violation_step) for v in self.verdicts]
        path = _io.write_csv(path, ["eta", "convex", "monotone", "grad_monotone", "first_violation"], rows)
        _io.write_json(path.with_suffix(".json"), self.summary())
        return path


def eta_verdict(f, x0, eta, steps, tol0=1e-10):
    try:
        traj = gd_run(f, x0, eta, steps)
    except DivergenceError:
        return EtaVerdict(float(eta), False, False, False, None, divergent=True)
    rep = analyze_trajectory(traj, tol0)
    return EtaVerdict(float(eta), rep.convex, rep.monotone_decreasing, rep.grad_norm_monotone,
                      rep.first_convexity_violation)


def eta_scan(f, x0, grid_size=50, steps=10, tol0=1e-10, bisect_iters=40, eta_range=None):
    """Classify a grid of step sizes in (0, 2/L) and bisect the convexity threshold.

    The grid is linspace(1e-3, 2 - 1e-3, grid_size) / L unless ``eta_range``
    gives explicit (eta_min, eta_max) inside (0, 2/L). The threshold is
    bisected between the last convex grid point below the first non-convex
    one and that non-convex point; it is 2/L when no violation is found.
    """
    if not f.is_smooth:
        raise UnsupportedError(f"{f.function_id}: scan needs a finite L")
    if not f.is_convex:
        raise PreconditionError("eta_scan expects a convex function")
    if grid_size < 1 or steps < 1:
        raise ValueError("grid_size and steps must be positive")
    L = f.smoothness_L
    x0 = as_point(x0, f.dimension)
    if eta_range is None:
        eps = 1e-3
        grid = np.linspace(eps, STABLE_LIMIT - eps, grid_size) / L
    else:
        lo, hi = eta_range
        if not 0 < lo <= hi < STABLE_LIMIT / L:
            raise PreconditionError(f"eta range must satisfy 0 < eta_min <= eta_max < 2/L = {STABLE_LIMIT / L}")
        grid = np.linspace(lo, hi, grid_size)
    verdicts = [eta_verdict(f, x0, eta, steps, tol0) for eta in grid]

    first_bad = next((i for i, v in enumerate(verdicts) if not v.convex and not v.divergent), None)
    if first_bad is None:
        threshold = STABLE_LIMIT / L
    else:
        lo = grid[first_bad - 1] if first_bad > 0 else 0.0
        hi = grid[first_bad]
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if eta_verdict(f, x0, mid, steps, tol0).convex:
                lo = mid
            else:
                hi = mid
        threshold = 0.5 * (lo + hi)

    return RegimeScanResult(
        eta_grid=[float(e) for e in grid],
        verdicts=verdicts,
        empirical_threshold=float(threshold),
        theoretical_threshold=CONVEX_LIMIT / L,
        function_id=f.function_id,
        x0=x0.tolist(),
        steps=int(steps),
        L=float(L),
    )


# ---------------------------------------------------------------------------
# theorem suite

CHECKS = ("T3.1", "T3.3", "T4.3", "T4.5", "TA.2", "TA.4")


def random_instance(rng, family=None):
    """A random convex finite-L catalogue member."""
    family = family or rng.choice(["square", "huber", "quadrand", "lse", "pq1d"])
    sub = int(rng.integers(2**31))
    if family == "square":
        return paper_square()
    if family == "huber":
        return make_counterexample(float(10 ** rng.uniform(-1, 1)))
    if family == "quadrand":
        return random_quadratic(sub, int(rng.integers(1, 5)))
    if family == "lse":
        return random_log_sum_exp(sub, int(rng.integers(2, 6)), int(rng.integers(1, 4)))
    if family == "pq1d":
        return random_convex_1d(sub, int(rng.integers(1, 7)))
    raise KeyError(family)


def _check_gd_convex(f, x0, rng, steps=200):
    eta = (1.0 - rng.uniform()) * CONVEX_LIMIT / f.smoothness_L
    traj = gd_run(f, x0, eta, steps)
    tol = 1e-10 * (1 + abs(traj.values[0]))
    return is_convex_sequence(traj.values, tol).convex, eta


def _check_grad_norms(f, x0, rng, boundary, steps=200):
    if boundary:
        eta = STABLE_LIMIT / f.smoothness_L
    else:
        eta = (1.0 - rng.uniform()) * STABLE_LIMIT / f.smoothness_L
    traj = gd_run(f, x0, eta, steps)
    return gradient_norm_monotone(traj, 1e-10 * (1 + traj.grad_norms[0])), eta


def _check_flow(f, x0):
    L = f.smoothness_L
    sol = reference_flow(f, x0, 0.01 / L, 5.0 / L)
    convex = continuous_curve_convexity(np.column_stack([sol.times, sol.values]), 1e-9)
    norms = monotone_non_increasing(sol.grad_norms, 1e-9)
    return convex, norms


def _check_euler_bound(f, x0):
    L = f.smoothness_L
    eta = min(0.1 / L, 0.5)
    R = 1.0 / L
    err, _ = euler_sup_error(f, x0, eta, R)
    err_half, _ = euler_sup_error(f, x0, eta / 2, R)
    K = float(np.linalg.norm(f.gradient(x0)))
    if K == 0:
        return err == 0 and err_half == 0, eta
    # errors at round-off level (e.g. x0 on a linear piece) carry no convergence signal
    floor = 1e-12 * (1.0 + float(np.linalg.norm(x0)))
    ok = err <= euler_error_bound(K, L, eta, R) and err_half <= err + floor
    if f.name in ("quad", "quadrand", "square") and err > 1e3 * floor:
        ok = ok and 0.3 <= err_half / err <= 0.7
    return ok, eta


def _check_euler_convex(f, x0):
    L = f.smoothness_L
    ts = np.linspace(0.0, 5.0 / L, 500)
    for eta in (1.0 / L, 0.5 / L):
        path = euler_path(f, x0, eta, 5.0 / L)
        vals = euler_values(f, path, ts)
        if not continuous_curve_convexity(np.column_stack([ts, vals]), 1e-9):
            return False, eta
    return True, 1.0 / L


@dataclass
class SuiteSummary:
    seed: int
    trials: int
    counts: dict
    failures: list = field(default_factory=list)

    @property
    def checks_passed(self):
        return sum(1 for c in CHECKS if self.counts[c] == self.trials)

    @property
    def passed(self):
        return self.checks_passed == len(CHECKS)

    def summary_line(self):
        return f"{self.checks_passed}/{len(CHECKS)} theorem checks passed"

    def to_dict(self):
        return {
            "seed": self.seed,
            "trials": self.trials,
            "counts": {c: self.counts[c] for c in CHECKS},
            "passed": self.passed,
            "summary": self.summary_line(),
            "failures": self.failures,
        }


def verify_theorem_suite(seed, trials, functions=None):
    """Run the six theorem checks on ``trials`` random instances.

    ``functions`` restricts the instances to the given objectives (one is
    drawn per trial); by default every convex finite-L family is sampled.
    Each check passing on a trial adds one to its count; failures are
    recorded with theorem, function id, step size and seed.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    counts = {c: 0 for c in CHECKS}
    failures = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        if functions:
            f = functions[int(rng.integers(len(functions)))]
        else:
            f = random_instance(rng)
        x0 = rng.uniform(-5, 5, f.dimension)
        results = {}
        results["T3.1"] = _check_gd_convex(f, x0, rng)
        results["T3.3"] = _check_grad_norms(f, x0, rng, boundary=(i % 10 == 0))
        flow_convex, flow_norms = _check_flow(f, x0)
        results["T4.3"] = (flow_convex, None)
        results["T4.5"] = (flow_norms, None)
        results["TA.2"] = _check_euler_bound(f, x0)
        results["TA.4"] = _check_euler_convex(f, x0)
        for c in CHECKS:
            ok, eta = results[c]
            if ok:
                counts[c] += 1
            else:
                failures.append({"theorem": c, "function_id": f.function_id, "eta": eta,
                                 "x0": x0.tolist(), "seed": int(seed), "trial": i})
    return SuiteSummary(int(seed), int(trials), counts, failures)


# ---------------------------------------------------------------------------
# fuzzing


class EtaMode(str, enum.Enum):
    SAFE = "SafeRegime"
    DANGER = "DangerRegime"


FUZZ_FAMILIES = ("pq1d", "huber", "quadrand")


def fuzz_trial(seed, i, eta_mode, family="pq1d", steps=200, tol0=1e-10):
    """One fuzz trial; returns a violation record or None."""
    eta_mode = EtaMode(eta_mode)
    rng = trial_rng(seed, i)
    f = random_instance(rng, family)
    L = f.smoothness_L
    if eta_mode is EtaMode.SAFE:
        x0 = rng.uniform(-5, 5, f.dimension)
        eta = (1.0 - rng.uniform()) * CONVEX_LIMIT / L
    else:
        sign = rng.choice([-1.0, 1.0], f.dimension)
        x0 = sign * rng.uniform(1, 3, f.dimension) / math.sqrt(L)
        eta = (CONVEX_LIMIT + (STABLE_LIMIT - CONVEX_LIMIT) * rng.uniform()) / L
    traj = gd_run(f, x0, eta, steps)
    rep = analyze_trajectory(traj, tol0)
    if rep.convex:
        return None
    runs = rep.consecutive_violation_runs
    return {
        "trial": i,
        "mode": eta_mode.value,
        "function_id": f.function_id,
        "params": {k: float(v) for k, v in f.params.items()},
        "L": L,
        "x0": x0.tolist(),
        "eta": float(eta),
        "eta_times_L": float(eta * L),
        "first_violation": rep.first_convexity_violation,
        "violation_count": len(rep.violation_magnitudes),
        "runs": [list(r) for r in runs],
        "max_run": max(n for _, n in runs),
        "worst_magnitude": min(rep.violation_magnitudes),
        "monotone": rep.monotone_decreasing,
    }


def _fuzz_chunk(args):
    seed, indices, mode, family, steps = args
    return [fuzz_trial(seed, i, mode, family, steps) for i in indices]


def fuzz_convexity(seed, trials, eta_mode, family="pq1d", steps=200, workers=1):
    """Search random 1-D piecewise quadratics (or other families) for non-convex curves.

    In SafeRegime eta is uniform in (0, 1.75/L] and nothing should be found;
    in DangerRegime eta is uniform in (1.75/L, 2/L) and x0 is drawn from
    [-3, -1] U [1, 3] scaled by 1/sqrt(L). Returns violation records in trial order.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    mode = EtaMode(eta_mode)
    if family not in FUZZ_FAMILIES:
        raise KeyError(f"unknown fuzz family {family!r}")
    if workers <= 1:
        results = _fuzz_chunk((seed, range(trials), mode, family, steps))
    else:
        size = math.ceil(trials / (workers * 4))
        chunks = [(seed, range(s, min(s + size, trials)), mode, family, steps) for s in range(0, trials, size)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = [r for part in ex.map(_fuzz_chunk, chunks) for r in part]
    return [r for r in results if r is not None]


def run_length_histogram(records):
    hist = {}
    for rec in records:
        for _, n in rec["runs"]:
            hist[n] = hist.get(n, 0) + 1
    return dict(sorted(hist.items()))
