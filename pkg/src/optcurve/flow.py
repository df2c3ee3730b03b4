"""Gradient flow x' = -grad f(x): Euler interpolation of GD and an RK4 reference.

The Euler path with step eta is the piecewise-linear curve through the
gradient-descent iterates,

    x_eta(t) = x_k - (t - k*eta) * grad f(x_k),   k = floor(t / eta),

so it agrees with GD at t = k*eta. The reference solution uses classical
fourth-order Runge-Kutta on a fixed grid and serves as the oracle against
which Euler errors are measured.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _io
from .descent import Source, Trajectory, descend
from .errors import DivergenceError, OutOfRangeError, PreconditionError, UnsupportedError
from .function_zoo import as_point

# t/eta within this relative distance of an integer counts as a grid point
_GRID_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class EulerPath:
    base_trajectory: Trajectory
    eta: float

    @property
    def horizon(self):
        return self.base_trajectory.steps * self.eta

    def __call__(self, t):
        return euler_evaluate(self, t)

    def to_csv(self, path):
        return self.base_trajectory.to_csv(path)


@dataclass(frozen=True, eq=False)
class FlowSolution:
    times: np.ndarray
    states: np.ndarray
    step_h: float
    function_id: str
    values: np.ndarray
    grad_norms: np.ndarray

    def state_at(self, t):
        """State at a grid time (nearest grid index; off-grid times are rejected)."""
        k = t / self.step_h
        i = int(round(k))
        if abs(k - i) > 1e-6 or not 0 <= i < len(self.times):
            raise OutOfRangeError(f"t={t} is not on the solution grid")
        return self.states[i]

    def to_csv(self, path):
        d = self.states.shape[1]
        header = ["t", "f", "grad_norm"]
        coords = d <= 8
        if coords:
            header += [f"x{i}" for i in range(d)]
        rows = []
        for t, v, g, x in zip(self.times, self.values, self.grad_norms, self.states):
            row = [float(t), float(v), float(g)]
            if coords:
                row += [float(c) for c in x]
            rows.append(row)
        return _io.write_csv(path, header, rows)


def euler_path(f, x0, eta, horizon_T):
    """Euler approximation of the flow with step ``eta`` covering [0, horizon_T]."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not horizon_T > 0:
        raise ValueError(f"horizon_T must be positive, got {horizon_T}")
    steps = max(1, math.ceil(horizon_T / eta - _GRID_SNAP))
    traj = descend(f, x0, eta, steps, Source.EULER_FLOW)
    return EulerPath(traj, float(eta))


def euler_evaluate(path, t):
    eta = path.eta
    traj = path.base_trajectory
    n_steps = traj.steps
    if t < 0 or t > path.horizon * (1 + 1e-12):
        raise OutOfRangeError(f"t={t} outside the generated horizon [0, {path.horizon}]")
    r = t / eta
    k = int(round(r))
    if abs(r - k) <= _GRID_SNAP * max(1.0, r) and k <= n_steps:
        return traj.points[k].copy()
    k = min(int(math.floor(r)), n_steps)
    return traj.points[k] - (t - k * eta) * traj.gradients[k]


def euler_values(f, path, times):
    """f along the Euler path at the given times."""
    return np.array([f.value(euler_evaluate(path, t)) for t in times])


def _rk4_step(grad, x, h):
    k1 = -grad(x)
    k2 = -grad(x + 0.5 * h * k1)
    k3 = -grad(x + 0.5 * h * k2)
    k4 = -grad(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _require_smooth(f):
    if not f.is_smooth:
        raise UnsupportedError(f"{f.function_id}: gradient flow oracle needs a finite L")


def reference_flow(f, x0, step_h, horizon_T):
    """Fixed-step RK4 solution on the grid {0, h, 2h, ...} up to >= horizon_T.

    ``step_h`` must not exceed 0.1/L.
    """
    _require_smooth(f)
    if not step_h > 0:
        raise ValueError("step_h must be positive")
    if not horizon_T > 0:
        raise ValueError("horizon_T must be positive")
    if step_h > 0.1 / f.smoothness_L * (1 + 1e-12):
        raise PreconditionError(f"step_h={step_h} exceeds 0.1/L={0.1 / f.smoothness_L}")
    m = max(1, math.ceil(horizon_T / step_h - _GRID_SNAP))
    x = as_point(x0, f.dimension).copy()
    states = np.empty((m + 1, f.dimension))
    states[0] = x
    for i in range(1, m + 1):
        x = _rk4_step(f.gradient, x, step_h)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite flow state at step {i}", i - 1)
        states[i] = x
    return _solution(f, step_h * np.arange(m + 1), states, step_h)


def _solution(f, times, states, h):
    values = np.array([f.value(x) for x in states])
    norms = np.array([np.linalg.norm(f.gradient(x)) for x in states])
    for a in (times, states, values, norms):
        a.setflags(write=False)
    return FlowSolution(times, states, float(h), f.function_id, values, norms)


def flow_states_at(f, x0, times, max_step=None):
    """RK4 flow states at arbitrary sorted times.

    Each gap between requested times is split into equal substeps of at most
    ``max_step`` (default 0.01/L), so requested times are hit exactly.
    """
    _require_smooth(f)
    if max_step is None:
        max_step = 0.01 / f.smoothness_L
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be non-negative and sorted")
    x = as_point(x0, f.dimension).copy()
    out = np.empty((times.size, f.dimension))
    t = 0.0
    for i, target in enumerate(times):
        gap = target - t
        if gap > 0:
            m = math.ceil(gap / max_step)
            h = gap / m
            for _ in range(m):
                x = _rk4_step(f.gradient, x, h)
            t = target
        out[i] = x
    return out


def euler_error_bound(K, L, eta, R):
    """(K*eta/2) * exp(L*(R+1)), the uniform Euler error bound on [0, R] for 0 < eta < 1."""
    for name, v in (("K", K), ("L", L), ("eta", eta), ("R", R)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if eta >= 1:
        raise PreconditionError("the bound is only established for eta < 1")
    try:
        growth = math.exp(L * (R + 1))
    except OverflowError:
        return math.inf
    return K * eta / 2 * growth


def euler_sup_error(f, x0, eta, R, max_step=None):
    """Largest ||x_eta(t) - x(t)|| over t in {k*eta/2} within [0, R].

    Returns ``(sup_error, t_at_sup)``.
    """
    path = euler_path(f, x0, eta, R)
    m = int(math.floor(2 * R / eta + _GRID_SNAP))
    ts = 0.5 * eta * np.arange(m + 1)
    ts = ts[ts <= R * (1 + 1e-12)]
    ref = flow_states_at(f, x0, ts, max_step)
    errs = np.array([np.linalg.norm(euler_evaluate(path, t) - xr) for t, xr in zip(ts, ref)])
    i = int(np.argmax(errs))
    return float(errs[i]), float(ts[i])


def curvature_at(f, x):
    if f.hessian_action is None:
        raise UnsupportedError(f"{f.function_id} provides no Hessian action")
    x = as_point(x, f.dimension)
    g = f.gradient(x)
    return 2.0 * float(g @ f.hessian_action(x, g))


def hessian_curvature(f, sol):
    """2 <grad f, H grad f> at every state of ``sol``: the second derivative of f(x(t))."""
    return np.array([curvature_at(f, x) for x in sol.states])
