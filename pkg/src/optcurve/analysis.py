"""Verdicts on optimization curves.

A sequence a_0, a_1, ... is convex (its piecewise-linear interpolation is a
convex function) iff the per-step progress a_n - a_{n+1} is non-increasing,
i.e. iff every second difference a_n - 2 a_{n+1} + a_{n+2} is >= 0. All
checks here take an explicit absolute tolerance; :func:`default_tolerance`
gives the conventional tol0 * (1 + max|a|).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _io
from .descent import gd_step
from .errors import OutOfRangeError, UnsupportedError
from .function_zoo import as_point

DEFAULT_TOL0 = 1e-10
_EPS = np.finfo(float).eps
# progress below this many ulps of the value is treated as converged
_NOISE_ULPS = 1e3


@dataclass
class CurveReport:
    monotone_decreasing: bool
    convex: bool
    grad_norm_monotone: Optional[bool]
    first_convexity_violation: Optional[int]
    violation_magnitudes: list = field(default_factory=list)
    consecutive_violation_runs: list = field(default_factory=list)
    tolerance_used: float = 0.0

    def violation_indices(self):
        return [s + i for s, n in self.consecutive_violation_runs for i in range(n)]

    def to_dict(self):
        d = asdict(self)
        d["consecutive_violation_runs"] = [list(r) for r in self.consecutive_violation_runs]
        return d

    def to_json(self, path):
        return _io.write_json(path, self.to_dict())


def default_tolerance(values, tol0=DEFAULT_TOL0):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return tol0
    return tol0 * (1.0 + float(np.max(np.abs(values))))


def interpolate_sequence(a, t):
    """Value at ``t`` of the piecewise-linear interpolation of (n, a_n)."""
    n = len(a)
    if n == 0 or t < 0 or t > n - 1:
        raise OutOfRangeError(f"t={t} outside [0, {n - 1}]")
    k = int(math.floor(t))
    if k == n - 1:
        return float(a[k])
    return float(a[k] + (t - k) * (a[k + 1] - a[k]))


def _runs(indices):
    runs = []
    for i in indices:
        if runs and runs[-1][0] + runs[-1][1] == i:
            runs[-1] = (runs[-1][0], runs[-1][1] + 1)
        else:
            runs.append((i, 1))
    return runs


def second_differences(a):
    a = np.asarray(a, dtype=float)
    return a[:-2] - 2.0 * a[1:-1] + a[2:]


def is_convex_sequence(a, tol=None):
    """Convexity verdict for a sequence, recording every violation.

    Second differences where both adjacent progress terms are below the
    round-off floor are not checked. Returns a CurveReport whose
    ``grad_norm_monotone`` is left as None.
    """
    a = np.asarray(a, dtype=float)
    if tol is None:
        tol = default_tolerance(a)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    monotone = bool(np.all(np.diff(a) <= tol)) if a.size > 1 else True
    if a.size < 3:
        return CurveReport(monotone, True, None, None, [], [], float(tol))
    progress = a[:-1] - a[1:]
    floor = _NOISE_ULPS * _EPS * (1.0 + np.abs(a[:-1]))
    noise = np.abs(progress) < floor
    sd = second_differences(a)
    bad = (sd < -tol) & ~(noise[:-1] & noise[1:])
    idx = np.flatnonzero(bad).tolist()
    return CurveReport(
        monotone_decreasing=monotone,
        convex=not idx,
        grad_norm_monotone=None,
        first_convexity_violation=idx[0] if idx else None,
        violation_magnitudes=[float(sd[i]) for i in idx],
        consecutive_violation_runs=_runs(idx),
        tolerance_used=float(tol),
    )


def gradient_norm_monotone(traj, tol=0.0):
    """True iff ||grad f(x_{n+1})|| <= ||grad f(x_n)|| + tol along the trajectory."""
    g = np.asarray(traj.grad_norms, dtype=float)
    if g.size == 0:
        raise ValueError("empty trajectory")
    return bool(np.all(g[1:] <= g[:-1] + tol))


def analyze_trajectory(traj, tol0=DEFAULT_TOL0):
    """Full CurveReport for a trajectory, tolerances scaled by value and gradient magnitudes."""
    report = is_convex_sequence(traj.values, default_tolerance(traj.values, tol0))
    report.grad_norm_monotone = gradient_norm_monotone(traj, default_tolerance(traj.grad_norms, tol0))
    return report


def characterization_equivalence(a, samples=100, seed=0, tol=None):
    """Cross-check the second-difference verdict against chord convexity of the interpolation.

    Draws ``samples`` triples s < u < t in [0, len(a)-1] and tests
    g(u) <= ((t-u) g(s) + (u-s) g(t)) / (t-s) + tol on the interpolated curve.
    Half the triples straddle a single random integer node, where any
    concave kink must sit. Returns True iff both verdicts agree.
    """
    a = np.asarray(a, dtype=float)
    if a.size < 3:
        raise ValueError("need at least three values")
    if tol is None:
        tol = default_tolerance(a)
    rng = np.random.default_rng(seed)
    top = a.size - 1
    chord_convex = True
    for i in range(samples):
        if i % 2 == 0:
            k = int(rng.integers(1, top))
            s = k - rng.uniform(0.05, 1.0)
            t = k + rng.uniform(0.05, 1.0)
        else:
            s, t = np.sort(rng.uniform(0.0, top, 2))
            if t - s < 1e-3:
                continue
        u = s + (t - s) * rng.uniform(0.1, 0.9)
        gs, gu, gt = (interpolate_sequence(a, v) for v in (s, u, t))
        if gu > ((t - u) * gs + (u - s) * gt) / (t - s) + tol:
            chord_convex = False
            break
    return chord_convex == is_convex_sequence(a, tol).convex


class CertificateGap(NamedTuple):
    lhs: float
    rhs: float
    scale: float

    def holds(self, rel=1e-10):
        return self.lhs >= self.rhs - rel * self.scale


def certificate_gap(f, x0, eta):
    """Both sides of the two-step lower bound on the curve's second difference.

    lhs = f(x2) - 2 f(x1) + f(x0)
    rhs = (7/(8L) - eta/2) ||g1 - g0||^2 + (1/(2L)) ||g2 - g1/2 - g0/2||^2

    lhs >= rhs for any convex L-smooth f and any eta; rhs >= 0 once
    eta <= 1.75/L. ``scale`` is a magnitude for relative comparisons.
    """
    if not f.is_smooth:
        raise UnsupportedError(f"{f.function_id}: certificate needs a finite L")
    if not eta > 0:
        raise ValueError("eta must be positive")
    L = f.smoothness_L
    x0 = as_point(x0, f.dimension)
    x1 = gd_step(f, x0, eta)
    x2 = gd_step(f, x1, eta)
    f0, f1, f2 = f.value(x0), f.value(x1), f.value(x2)
    g0, g1, g2 = f.gradient(x0), f.gradient(x1), f.gradient(x2)
    lhs = f2 - 2.0 * f1 + f0
    d10 = g1 - g0
    mix = g2 - 0.5 * g1 - 0.5 * g0
    rhs = (7.0 / (8.0 * L) - eta / 2.0) * float(d10 @ d10) + float(mix @ mix) / (2.0 * L)
    scale = 1.0 + abs(f0) + abs(f1) + abs(f2) + (1.0 / L + eta) * float(g0 @ g0 + g1 @ g1 + g2 @ g2)
    return CertificateGap(float(lhs), float(rhs), float(scale))


def continuous_curve_convexity(values_at_times, tol=0.0):
    """True iff the slopes between consecutive samples (t_i, v_i) are non-decreasing within tol."""
    pts = np.asarray(values_at_times, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected a list of (t, v) pairs")
    if pts.shape[0] < 3:
        raise ValueError("need at least three samples")
    t, v = pts[:, 0], pts[:, 1]
    dt = np.diff(t)
    if np.any(dt == 0):
        raise ValueError("duplicate sample times")
    if np.any(dt < 0):
        raise ValueError("sample times must be increasing")
    slopes = np.diff(v) / dt
    return bool(np.all(np.diff(slopes) >= -tol))


def monotone_non_increasing(values, tol=0.0):
    v = np.asarray(values, dtype=float)
    return bool(np.all(v[1:] <= v[:-1] + tol))
