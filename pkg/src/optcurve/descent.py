"""Constant step-size gradient descent with per-step telemetry."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _io
from .errors import DivergenceError
from .function_zoo import as_point


class Source(str, enum.Enum):
    GRADIENT_DESCENT = "GradientDescent"
    EULER_FLOW = "EulerFlow"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Iterates x_0..x_N with f(x_n), ||grad f(x_n)|| recorded as they were computed.

    ``gradients`` keeps the full gradient vectors so that downstream code
    (Euler interpolation, certificates) never re-evaluates f.
    """

    points: np.ndarray
    values: np.ndarray
    grad_norms: np.ndarray
    gradients: np.ndarray
    step_size: float
    source: Source
    function_id: str

    def __post_init__(self):
        n = len(self.values)
        if not (len(self.points) == len(self.grad_norms) == len(self.gradients) == n):
            raise ValueError("trajectory lists must share a length")

    @property
    def steps(self):
        return len(self.values) - 1

    @property
    def x0(self):
        return self.points[0]

    def metadata(self):
        return {
            "function_id": self.function_id,
            "eta": self.step_size,
            "x0": self.points[0],
            "source": self.source.value,
            "steps": self.steps,
        }

    def to_csv(self, path):
        """Write ``n,f,grad_norm`` rows and a ``.json`` metadata sidecar next to ``path``."""
        rows = ((n, float(v), float(g)) for n, (v, g) in enumerate(zip(self.values, self.grad_norms)))
        path = _io.write_csv(path, ["n", "f", "grad_norm"], rows)
        _io.write_json(path.with_suffix(".json"), self.metadata())
        return path


def gd_step(f, x, eta):
    """x - eta * grad f(x)."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    x = as_point(x, f.dimension)
    return x - eta * f.gradient(x)


def descend(f, x0, eta, steps, source=Source.GRADIENT_DESCENT):
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if steps < 0 or int(steps) != steps:
        raise ValueError(f"steps must be a non-negative integer, got {steps}")
    steps = int(steps)
    x = as_point(x0, f.dimension).copy()
    d = f.dimension
    points = np.empty((steps + 1, d))
    grads = np.empty((steps + 1, d))
    values = np.empty(steps + 1)
    norms = np.empty(steps + 1)

    def partial(k):
        if k < 0:
            return None
        return Trajectory(
            _frozen(points[: k + 1]), _frozen(values[: k + 1]), _frozen(norms[: k + 1]),
            _frozen(grads[: k + 1]), float(eta), source, f.function_id,
        )

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(steps + 1):
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"non-finite iterate at step {n}", n - 1, partial(n - 1))
            v = f.value(x)
            g = f.gradient(x)
            if not (math.isfinite(v) and np.all(np.isfinite(g))):
                raise DivergenceError(f"non-finite value or gradient at step {n}", n - 1, partial(n - 1))
            points[n] = x
            values[n] = v
            grads[n] = g
            norms[n] = np.linalg.norm(g)
            if n < steps:
                x = x - eta * g
    return partial(steps)


def gd_run(f, x0, eta, steps):
    """Run ``steps`` gradient-descent steps from ``x0`` and record the trajectory.

    Raises DivergenceError (carrying the partial trajectory) on any non-finite
    iterate, value or gradient.
    """
    return descend(f, x0, eta, steps, Source.GRADIENT_DESCENT)
