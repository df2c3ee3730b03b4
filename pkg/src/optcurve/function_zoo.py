"""Catalogue of convex test objectives with hand-coded gradients.

Every member is an :class:`ObjectiveFunction`. Points are 1-D float arrays,
including in dimension one (``np.array([t])``). ``smoothness_L`` is
``math.inf`` for members whose gradient is not Lipschitz.

Members are addressable by an id string of the form ``name_key=value_...``,
e.g. ``huber_l=4`` or ``quad_diag=1:4_b=0:1``; see :func:`from_id`.
"""
from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import UnsupportedError

UNBOUNDED = math.inf


@dataclass(frozen=True)
class AnalyticSolution:
    gd_iterate: Optional[Callable] = None  # (x0, eta, n) -> point
    flow_state: Optional[Callable] = None  # (x0, t) -> point
    min_value: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ObjectiveFunction:
    name: str
    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    smoothness_L: float
    is_convex: bool = True
    hessian_action: Optional[Callable] = None
    analytic: Optional[AnalyticSolution] = None
    params: dict = field(default_factory=dict)
    function_id: str = ""
    # 1-D locations where finite differences of the gradient or value are unreliable
    kinks: tuple = ()

    @property
    def is_smooth(self):
        return math.isfinite(self.smoothness_L)

    def descriptor(self):
        """JSON-ready summary: name, id, L, dimension, params."""
        return {
            "name": self.name,
            "function_id": self.function_id or self.name,
            "L": self.smoothness_L if self.is_smooth else "unbounded",
            "dimension": self.dimension,
            "params": {k: float(v) for k, v in self.params.items()},
        }


def as_point(x, dimension=None):
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"point must be a vector, got shape {p.shape}")
    if dimension is not None and p.shape[0] != dimension:
        raise ValueError(f"point has dimension {p.shape[0]}, expected {dimension}")
    return p


def _fmt(v):
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _fmt_list(vals):
    return ":".join(_fmt(v) for v in vals)


def _with_l(function_id, L):
    base = re.sub(r"_l=[^_]*", "", function_id)
    return f"{base}_l={_fmt(L)}"


# ---------------------------------------------------------------------------
# quadratics


def quadratic(A, b=None, function_id=None):
    """f(x) = 1/2 x^T A x + b^T x for symmetric PSD ``A``; L is the top eigenvalue."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * (1 + np.abs(A).max())):
        raise ValueError("A must be symmetric")
    b = np.zeros(n) if b is None else as_point(b, n)
    eig = np.linalg.eigvalsh(A)
    if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
        raise ValueError("A must be positive semi-definite")
    L = float(eig[-1])
    if L <= 0:
        raise ValueError("A must have a positive eigenvalue (L > 0)")

    def value(x):
        return float(0.5 * x @ (A @ x) + b @ x)

    def gradient(x):
        return A @ x + b

    def hessian_action(x, v):
        return A @ np.asarray(v, dtype=float)

    diagonal = np.count_nonzero(A - np.diag(np.diag(A))) == 0
    analytic = None
    params = {"L": L}
    if diagonal:
        d = np.diag(A).copy()
        analytic = _diagonal_quadratic_solution(d, b)
        params.update({f"a_{i}": d[i] for i in range(n)})
        params.update({f"b_{i}": b[i] for i in range(n)})
        if function_id is None:
            function_id = f"quad_diag={_fmt_list(d)}"
            if np.any(b != 0):
                function_id += f"_b={_fmt_list(b)}"
    elif function_id is None:
        function_id = f"quad_dim={n}"

    return ObjectiveFunction(
        name="quad",
        dimension=n,
        value=value,
        gradient=gradient,
        smoothness_L=L,
        hessian_action=hessian_action,
        analytic=analytic,
        params=params,
        function_id=function_id,
    )


def _diagonal_quadratic_solution(d, b):
    pos = d > 0
    xstar = np.where(pos, -b / np.where(pos, d, 1.0), 0.0)
    min_value = None
    if np.all(pos) or np.all(b[~pos] == 0):
        min_value = float(-0.5 * np.sum(np.where(pos, b**2 / np.where(pos, d, 1.0), 0.0)))

    def gd_iterate(x0, eta, n):
        x0 = as_point(x0, d.shape[0])
        if n == 0:
            return x0.copy()
        contraction = (1.0 - eta * d) ** n
        return np.where(pos, xstar + contraction * (x0 - xstar), x0 - n * eta * b)

    def flow_state(x0, t):
        x0 = as_point(x0, d.shape[0])
        if t == 0:
            return x0.copy()
        return np.where(pos, xstar + np.exp(-d * t) * (x0 - xstar), x0 - t * b)

    return AnalyticSolution(gd_iterate=gd_iterate, flow_state=flow_state, min_value=min_value)


def paper_square():
    """f(x) = x^2 in one dimension, L = 2."""
    f = quadratic([[2.0]], function_id="square")
    return _renamed(f, "square")


def random_quadratic(seed, dim):
    """Random PSD quadratic with a linear term; eigenvalues in [0, ~dim]."""
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(dim, dim))
    A = M.T @ M / dim
    A = 0.5 * (A + A.T)
    b = rng.normal(size=dim)
    f = quadratic(A, b, function_id=f"quadrand_seed={_fmt(seed)}_dim={dim}")
    return _renamed(f, "quadrand", extra={"seed": seed, "dim": dim})


def _renamed(f, name, extra=None):
    params = dict(f.params)
    if extra:
        params.update(extra)
    return ObjectiveFunction(
        name=name,
        dimension=f.dimension,
        value=f.value,
        gradient=f.gradient,
        smoothness_L=f.smoothness_L,
        is_convex=f.is_convex,
        hessian_action=f.hessian_action,
        analytic=f.analytic,
        params=params,
        function_id=f.function_id,
        kinks=f.kinks,
    )


# ---------------------------------------------------------------------------
# one-dimensional piecewise members


def huber_counterexample():
    """1/2 t^2 for t <= 1, t - 1/2 beyond; convex and 1-smooth."""

    def value(x):
        t = float(x[0])
        return 0.5 * t * t if t <= 1.0 else t - 0.5

    def gradient(x):
        t = float(x[0])
        return np.array([t if t <= 1.0 else 1.0])

    def hessian_action(x, v):
        t = float(x[0])
        return np.asarray(v, dtype=float) * (1.0 if t <= 1.0 else 0.0)

    return ObjectiveFunction(
        name="huber",
        dimension=1,
        value=value,
        gradient=gradient,
        smoothness_L=1.0,
        hessian_action=hessian_action,
        analytic=AnalyticSolution(min_value=0.0),
        params={"l": 1.0},
        function_id="huber_l=1",
        kinks=(1.0,),
    )


def abs_plus_relu():
    """|x| + max(0, x): convex, 2-Lipschitz, not smooth. f'(0) is taken as 0."""

    def value(x):
        t = float(x[0])
        return abs(t) + max(0.0, t)

    def gradient(x):
        t = float(x[0])
        if t < 0:
            return np.array([-1.0])
        if t > 0:
            return np.array([2.0])
        return np.array([0.0])

    return ObjectiveFunction(
        name="absrelu",
        dimension=1,
        value=value,
        gradient=gradient,
        smoothness_L=UNBOUNDED,
        analytic=AnalyticSolution(min_value=0.0),
        function_id="absrelu",
        kinks=(0.0,),
    )


def random_convex_1d(seed, pieces):
    """Continuous piecewise-quadratic convex function on the line.

    ``pieces + 1`` breakpoints are drawn uniformly in [-5, 5] and a
    non-decreasing slope in [-10, 10] is attached to each; the derivative
    interpolates linearly between breakpoints and is constant outside them.
    The outer slopes straddle zero so a minimizer exists.
    """
    if pieces < 1:
        raise ValueError("pieces must be >= 1")
    rng = np.random.default_rng(seed)
    knots = np.sort(rng.uniform(-5.0, 5.0, pieces + 1))
    lo = rng.uniform(-10.0, 0.0)
    hi = rng.uniform(0.0, 10.0)
    slopes = np.concatenate([[lo], np.sort(rng.uniform(lo, hi, pieces - 1)), [hi]])
    widths = np.diff(knots)
    curv = np.diff(slopes) / widths
    cumvals = np.concatenate([[0.0], np.cumsum(widths * (slopes[:-1] + slopes[1:]) / 2)])

    kl = knots.tolist()
    sl = slopes.tolist()
    cl = curv.tolist()
    fl = cumvals.tolist()
    last = len(kl) - 1

    def value(x):
        t = float(x[0])
        if t < kl[0]:
            return sl[0] * (t - kl[0])
        if t >= kl[last]:
            return fl[last] + sl[last] * (t - kl[last])
        i = bisect.bisect_right(kl, t) - 1
        d = t - kl[i]
        return fl[i] + sl[i] * d + 0.5 * cl[i] * d * d

    def deriv(t):
        if t < kl[0]:
            return sl[0]
        if t >= kl[last]:
            return sl[last]
        i = bisect.bisect_right(kl, t) - 1
        return sl[i] + cl[i] * (t - kl[i])

    def gradient(x):
        return np.array([deriv(float(x[0]))])

    def hessian_action(x, v):
        t = float(x[0])
        if t < kl[0] or t >= kl[last]:
            c = 0.0
        else:
            c = cl[bisect.bisect_right(kl, t) - 1]
        return np.asarray(v, dtype=float) * c

    # minimizer: where the piecewise-linear derivative crosses zero
    j = int(np.searchsorted(slopes, 0.0))
    if slopes[j] == 0.0:
        xmin = knots[j]
    else:
        xmin = knots[j - 1] - slopes[j - 1] / curv[j - 1]

    return ObjectiveFunction(
        name="pq1d",
        dimension=1,
        value=value,
        gradient=gradient,
        smoothness_L=float(curv.max()),
        hessian_action=hessian_action,
        analytic=AnalyticSolution(min_value=value(np.array([xmin]))),
        params={"seed": seed, "pieces": pieces},
        function_id=f"pq1d_seed={_fmt(seed)}_pieces={pieces}",
        kinks=tuple(kl),
    )


# ---------------------------------------------------------------------------
# log-sum-exp


def log_sum_exp(a, c, function_id=None):
    """f(x) = log sum_i exp(a_i . x + c_i).

    L = ||a||_2^2 / 2, from the softmax covariance having spectral norm at most 1/2.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != a.shape[0]:
        raise ValueError("a and c disagree on the number of terms")
    L = 0.5 * float(np.linalg.norm(a, 2)) ** 2
    if L <= 0:
        raise ValueError("a must be nonzero")

    def softmax(x):
        z = a @ x + c
        zmax = z.max()
        w = np.exp(z - zmax)
        s = w.sum()
        return z, zmax, s, w / s

    def value(x):
        _, zmax, s, _ = softmax(x)
        return float(zmax + math.log(s))

    def gradient(x):
        return a.T @ softmax(x)[3]

    def hessian_action(x, v):
        p = softmax(x)[3]
        av = a @ np.asarray(v, dtype=float)
        return a.T @ (p * av - p * (p @ av))

    if function_id is None:
        function_id = f"lse_m={a.shape[0]}_n={a.shape[1]}"
    return ObjectiveFunction(
        name="lse",
        dimension=a.shape[1],
        value=value,
        gradient=gradient,
        smoothness_L=L,
        hessian_action=hessian_action,
        params={"m": a.shape[0], "n": a.shape[1], "L": L},
        function_id=function_id,
    )


def random_log_sum_exp(seed=0, m=4, n=2):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, n))
    c = rng.normal(size=m)
    f = log_sum_exp(a, c, function_id=f"lse_seed={_fmt(seed)}_m={m}_n={n}")
    return _renamed(f, "lse", extra={"seed": seed})


# ---------------------------------------------------------------------------
# rescaling


def rescale(f, L_new):
    """Return g(t) = f(s t) with s = sqrt(L_new / L_f), so g is L_new-smooth.

    Gradient descent on g from x0/s with step eta/s^2 visits exactly the
    points x_n/s of the run on f from x0 with step eta.
    """
    if not f.is_smooth:
        raise UnsupportedError(f"{f.function_id}: cannot rescale a function without finite L")
    if not L_new > 0:
        raise ValueError("L_new must be positive")
    if L_new == f.smoothness_L:
        return f
    s = math.sqrt(L_new / f.smoothness_L)
    s2 = s * s

    def value(x):
        return f.value(s * x)

    def gradient(x):
        return s * f.gradient(s * x)

    hessian_action = None
    if f.hessian_action is not None:

        def hessian_action(x, v):
            return s2 * f.hessian_action(s * x, v)

    analytic = None
    if f.analytic is not None:
        fa = f.analytic
        gd = flow = None
        if fa.gd_iterate is not None:

            def gd(x0, eta, n):
                if n == 0:
                    return as_point(x0).copy()
                return fa.gd_iterate(s * as_point(x0), eta * s2, n) / s

        if fa.flow_state is not None:

            def flow(x0, t):
                if t == 0:
                    return as_point(x0).copy()
                return fa.flow_state(s * as_point(x0), s2 * t) / s

        analytic = AnalyticSolution(gd_iterate=gd, flow_state=flow, min_value=fa.min_value)

    params = dict(f.params)
    params["l"] = float(L_new)
    return ObjectiveFunction(
        name=f.name,
        dimension=f.dimension,
        value=value,
        gradient=gradient,
        smoothness_L=float(L_new),
        is_convex=f.is_convex,
        hessian_action=hessian_action,
        analytic=analytic,
        params=params,
        function_id=_with_l(f.function_id or f.name, L_new),
        kinks=tuple(k / s for k in f.kinks),
    )


def make_counterexample(L):
    """The non-convexity counterexample rescaled to be L-smooth."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    return rescale(huber_counterexample(), L)


# ---------------------------------------------------------------------------
# checks


def fd_step(x):
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def finite_difference_gradient(f, x):
    x = as_point(x, f.dimension)
    h = fd_step(x)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f.value(x + e) - f.value(x - e)) / (2 * h)
    return g


def gradient_check(f, points, tol=1e-6):
    """True iff central differences agree with ``f.gradient`` at every point.

    Agreement is ``max|fd - grad| <= tol * max(1, max|grad|)``. Points within
    one FD step of a listed kink are skipped.
    """
    points = list(points)
    if not points:
        raise ValueError("gradient_check needs at least one point")
    if not tol > 0:
        raise ValueError("tol must be positive")
    for x in points:
        x = as_point(x, f.dimension)
        h = fd_step(x)
        if f.dimension == 1 and any(abs(x[0] - k) <= h for k in f.kinks):
            continue
        g = f.gradient(x)
        fd = finite_difference_gradient(f, x)
        if np.max(np.abs(fd - g)) > tol * max(1.0, float(np.max(np.abs(g)))):
            return False
    return True


# ---------------------------------------------------------------------------
# id strings


def _floats(s):
    return [float(v) for v in s.split(":")]


def _build(name, kv):
    if name == "square":
        f = paper_square()
    elif name == "huber":
        f = huber_counterexample()
    elif name == "absrelu":
        f = abs_plus_relu()
    elif name == "quad":
        if "diag" not in kv:
            raise KeyError("quad needs diag=a1:a2:...")
        d = _floats(kv.pop("diag"))
        b = _floats(kv.pop("b")) if "b" in kv else None
        f = quadratic(np.diag(d), b)
    elif name == "quadrand":
        f = random_quadratic(int(kv.pop("seed", 0)), int(kv.pop("dim", 2)))
    elif name == "lse":
        f = random_log_sum_exp(int(kv.pop("seed", 0)), int(kv.pop("m", 4)), int(kv.pop("n", 2)))
    elif name == "pq1d":
        f = random_convex_1d(int(kv.pop("seed", 0)), int(kv.pop("pieces", 4)))
    else:
        raise KeyError(f"unknown function {name!r}; known: {', '.join(CATALOGUE)}")
    return f


CATALOGUE = ("square", "huber", "absrelu", "quad", "quadrand", "lse", "pq1d")


def from_id(fid):
    """Build a catalogue member from an id string such as ``huber_l=4``.

    Every finite-L member accepts ``l=<L>`` to rescale it. Unknown names or
    keys raise ``KeyError``.
    """
    parts = fid.strip().split("_")
    name, kv = parts[0], {}
    for part in parts[1:]:
        if "=" not in part:
            raise KeyError(f"malformed parameter {part!r} in {fid!r}")
        k, v = part.split("=", 1)
        kv[k] = v
    L = float(kv.pop("l")) if "l" in kv else None
    f = _build(name, kv)
    if kv:
        raise KeyError(f"unknown parameter(s) {sorted(kv)} for {name}")
    if L is not None:
        f = rescale(f, L)
    return f
