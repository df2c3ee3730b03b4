"""Command-line front end.

    optcurve run-gd --fn square --x0 3 --eta 0.1 --steps 20 --out out/
    optcurve counterexample --eta 1.9
    optcurve verify --seed 42 --trials 100

Every command writes its artifacts plus ``metadata.json`` and ``config.txt``
into ``--out``. Options may also come from a flat ``key=value`` file given
with ``--config``; command-line flags override it.

Exit status: 0 on success, 1 when a theorem check fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, _io
from .analysis import (
    DEFAULT_TOL0,
    analyze_trajectory,
    continuous_curve_convexity,
    monotone_non_increasing,
)
from .descent import gd_run
from .errors import DivergenceError, OutOfRangeError, PreconditionError, UnsupportedError
from .experiments import (
    CONVEX_LIMIT,
    STABLE_LIMIT,
    EtaMode,
    eta_scan,
    fuzz_convexity,
    reproduce_counterexample,
    run_length_histogram,
    verify_theorem_suite,
)
from .flow import euler_error_bound, euler_path, euler_sup_error, reference_flow
from .function_zoo import as_point, from_id

COMMANDS = ("run-gd", "run-flow", "scan", "counterexample", "verify", "fuzz")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    fn: Optional[str] = None
    x0: Optional[tuple] = None
    eta: Optional[float] = None
    eta_min: Optional[float] = None
    eta_max: Optional[float] = None
    steps: Optional[int] = None
    horizon: Optional[float] = None
    step_h: Optional[float] = None
    grid: Optional[int] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    mode: Optional[str] = None
    family: Optional[str] = None
    workers: Optional[int] = None
    out: str = "out"
    tol: Optional[float] = None

    def to_text(self, include_out=True):
        lines = []
        for fl in fields(self):
            v = getattr(self, fl.name)
            if v is None or (fl.name == "out" and not include_out):
                continue
            if fl.name == "x0":
                v = ",".join(repr(float(c)) for c in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{fl.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        kv = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line without '=': {raw!r}")
            k, v = line.split("=", 1)
            kv[k.strip().replace("-", "_")] = v.strip()
        return cls.from_mapping(kv)

    @classmethod
    def from_mapping(cls, kv):
        known = {fl.name: fl for fl in fields(cls)}
        args = {}
        for k, v in kv.items():
            if k not in known:
                raise UsageError(f"unknown config key {k!r}")
            args[k] = _coerce(k, v)
        if "command" not in args:
            raise UsageError("config needs a command")
        return cls(**args)

    def as_dict(self):
        d = dataclasses.asdict(self)
        if d["x0"] is not None:
            d["x0"] = list(d["x0"])
        return d


_INTS = {"steps", "grid", "seed", "trials", "workers"}
_FLOATS = {"eta", "eta_min", "eta_max", "horizon", "step_h", "tol"}


def _coerce(key, v):
    if v is None:
        return None
    if key == "x0":
        if isinstance(v, str):
            try:
                return tuple(float(c) for c in v.split(","))
            except ValueError:
                raise UsageError(f"bad x0 {v!r}") from None
        return tuple(float(c) for c in np.atleast_1d(v))
    try:
        if key in _INTS:
            return int(v)
        if key in _FLOATS:
            return float(v)
    except ValueError:
        raise UsageError(f"bad value for {key}: {v!r}") from None
    return str(v)


def build_parser():
    p = argparse.ArgumentParser(prog="optcurve", description="Optimization-curve convexity laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file; flags override it")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("--tol", type=float, help=f"base tolerance tol0 (default {DEFAULT_TOL0})")

    sp = sub.add_parser("run-gd", help="gradient descent trajectory and curve report")
    common(sp)
    sp.add_argument("--fn")
    sp.add_argument("--x0")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--steps", type=int)

    sp = sub.add_parser("run-flow", help="reference gradient flow (and Euler path with --eta)")
    common(sp)
    sp.add_argument("--fn")
    sp.add_argument("--x0")
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--eta", type=float, help="also emit the Euler path with this step")
    sp.add_argument("--step-h", dest="step_h", type=float, help="RK4 step (default 0.01/L)")

    sp = sub.add_parser("scan", help="step-size regime scan with threshold bisection")
    common(sp)
    sp.add_argument("--fn")
    sp.add_argument("--x0")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--grid", type=int, help="number of grid points (default 50)")
    sp.add_argument("--eta-min", dest="eta_min", type=float)
    sp.add_argument("--eta-max", dest="eta_max", type=float)

    sp = sub.add_parser("counterexample", help="two-step non-convexity counterexample")
    common(sp)
    sp.add_argument("--eta", type=float)

    sp = sub.add_parser("verify", help="randomized theorem suite")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("fuzz", help="random search for non-convex curves")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--mode", choices=["safe", "danger", EtaMode.SAFE.value, EtaMode.DANGER.value])
    sp.add_argument("--family", choices=["pq1d", "huber", "quadrand"])
    sp.add_argument("--steps", type=int)
    sp.add_argument("--workers", type=int)
    return p


def config_from_args(ns):
    base = {}
    if getattr(ns, "config", None):
        try:
            text = Path(ns.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        base = ExperimentConfig.from_text(text).as_dict()
        base = {k: v for k, v in base.items() if v is not None}
        if base.get("command", ns.command) != ns.command:
            raise UsageError(f"config is for {base['command']!r}, not {ns.command!r}")
    for k, v in vars(ns).items():
        if k == "config" or v is None:
            continue
        base[k] = v
    base["command"] = ns.command
    return ExperimentConfig.from_mapping(base)


# ---------------------------------------------------------------------------
# command implementations; each returns (exit_status, summary_text, extra metadata)


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"{cfg.command} needs --{', --'.join(m.replace('_', '-') for m in missing)}")


def _function(cfg):
    try:
        return from_id(cfg.fn)
    except KeyError as exc:
        raise UsageError(f"unknown function: {exc.args[0]}") from None


def _x0(cfg, f):
    try:
        return as_point(cfg.x0, f.dimension)
    except ValueError as exc:
        raise UsageError(f"x0: {exc}") from None


def _tol0(cfg):
    return DEFAULT_TOL0 if cfg.tol is None else cfg.tol


def cmd_run_gd(cfg, out):
    _need(cfg, "fn", "x0", "eta")
    f = _function(cfg)
    x0 = _x0(cfg, f)
    steps = 100 if cfg.steps is None else cfg.steps
    if not cfg.eta > 0:
        raise UsageError("precondition eta > 0 violated")
    L = f.smoothness_L
    try:
        traj = gd_run(f, x0, cfg.eta, steps)
    except DivergenceError as exc:
        if exc.partial is not None:
            exc.partial.to_csv(out / "trajectory.csv")
        expected = not (f.is_smooth and cfg.eta <= STABLE_LIMIT / L)
        msg = f"{f.function_id}: diverged after step {exc.last_index} at eta={cfg.eta}"
        return (EXIT_OK if expected else EXIT_FAIL), msg, {"diverged_at": exc.last_index}
    traj.to_csv(out / "trajectory.csv")
    rep = analyze_trajectory(traj, _tol0(cfg))
    rep.to_json(out / "report.json")
    status = EXIT_OK
    notes = []
    if f.is_smooth and f.is_convex:
        if cfg.eta <= CONVEX_LIMIT / L and not rep.convex:
            status = EXIT_FAIL
            notes.append("convexity expected for eta <= 1.75/L but violated")
        if cfg.eta <= STABLE_LIMIT / L and not rep.grad_norm_monotone:
            status = EXIT_FAIL
            notes.append("gradient norms expected non-increasing for eta <= 2/L")
    msg = (
        f"{f.function_id}: {steps} GD steps at eta={cfg.eta} (eta*L={cfg.eta * L:g}); "
        f"f {traj.values[0]:g} -> {traj.values[-1]:g}; monotone={rep.monotone_decreasing}, "
        f"convex={rep.convex}, grad_norm_monotone={rep.grad_norm_monotone}"
    )
    if rep.first_convexity_violation is not None:
        msg += f"; first convexity violation at n={rep.first_convexity_violation}"
    if notes:
        msg += "; " + "; ".join(notes)
    return status, msg, {}


def cmd_run_flow(cfg, out):
    _need(cfg, "fn", "x0", "horizon")
    f = _function(cfg)
    x0 = _x0(cfg, f)
    if not f.is_smooth:
        raise UsageError(f"{f.function_id} has no finite L; gradient flow oracle unsupported")
    L = f.smoothness_L
    h = cfg.step_h if cfg.step_h is not None else 0.01 / L
    sol = reference_flow(f, x0, h, cfg.horizon)
    sol.to_csv(out / "flow.csv")
    slope_ok = continuous_curve_convexity(np.column_stack([sol.times, sol.values]), 1e-9)
    norm_ok = monotone_non_increasing(sol.grad_norms, 1e-9)
    extra = {"flow_curve_convex": slope_ok, "flow_grad_norm_monotone": norm_ok}
    msg = (
        f"{f.function_id}: RK4 flow h={h:g} to t={sol.times[-1]:g}; f {sol.values[0]:g} -> "
        f"{sol.values[-1]:g}; curve convex={slope_ok}, grad norms non-increasing={norm_ok}"
    )
    if cfg.eta is not None:
        path = euler_path(f, x0, cfg.eta, cfg.horizon)
        path.to_csv(out / "euler.csv")
        err, t_at = euler_sup_error(f, x0, cfg.eta, cfg.horizon)
        K = float(np.linalg.norm(f.gradient(x0)))
        bound = euler_error_bound(K, L, cfg.eta, cfg.horizon) if (K > 0 and cfg.eta < 1) else None
        extra.update({"euler_eta": cfg.eta, "euler_sup_error": err, "euler_sup_error_t": t_at,
                      "euler_error_bound": bound})
        msg += f"; Euler eta={cfg.eta:g} sup error {err:.6g} at t={t_at:g}"
        if bound is not None:
            msg += f" (bound {bound:.6g})"
    _io.write_json(out / "flow_summary.json", extra)
    return (EXIT_OK if slope_ok and norm_ok else EXIT_FAIL), msg, {}


def cmd_scan(cfg, out):
    _need(cfg, "fn", "x0")
    f = _function(cfg)
    x0 = _x0(cfg, f)
    if not f.is_smooth:
        raise UsageError(f"{f.function_id} has no finite L; scan unsupported")
    eta_range = None
    if cfg.eta_min is not None or cfg.eta_max is not None:
        _need(cfg, "eta_min", "eta_max")
        eta_range = (cfg.eta_min, cfg.eta_max)
    res = eta_scan(f, x0, cfg.grid or 50, cfg.steps or 10, _tol0(cfg), eta_range=eta_range)
    res.to_csv(out / "scan.csv")
    bad_safe = [v.eta for v in res.verdicts if not v.convex and v.eta <= res.theoretical_threshold]
    msg = (
        f"{f.function_id}: {len(res.eta_grid)} step sizes, {sum(v.convex for v in res.verdicts)} convex; "
        f"empirical threshold {res.empirical_threshold:.12g} vs 1.75/L = {res.theoretical_threshold:.12g}"
    )
    if bad_safe:
        msg += f"; non-convex at eta <= 1.75/L: {bad_safe}"
    return (EXIT_FAIL if bad_safe else EXIT_OK), msg, {}


def cmd_counterexample(cfg, out):
    eta = 1.9 if cfg.eta is None else cfg.eta
    rec = reproduce_counterexample(eta)
    _io.write_json(out / "counterexample.json", rec.to_dict())
    msg = (
        f"eta={eta}: x={rec.x}, f={rec.f}; f0-f1={rec.f[0] - rec.f[1]:.6g} < "
        f"f1-f2={rec.f[1] - rec.f[2]:.6g} is {rec.violated}; eta^2-15.75eta+24.5={rec.quadratic_lhs:.6g}"
    )
    return (EXIT_OK if rec.violated else EXIT_FAIL), msg, {}


def cmd_verify(cfg, out):
    seed = 42 if cfg.seed is None else cfg.seed
    trials = 100 if cfg.trials is None else cfg.trials
    summary = verify_theorem_suite(seed, trials)
    _io.write_json(out / "verify.json", summary.to_dict())
    counts = ", ".join(f"{c} {n}/{trials}" for c, n in summary.to_dict()["counts"].items())
    msg = f"{summary.summary_line()} (seed={seed}, trials={trials}: {counts})"
    for fail in summary.failures[:10]:
        msg += f"\n  FAIL {fail['theorem']} {fail['function_id']} eta={fail['eta']} trial={fail['trial']}"
    return (EXIT_OK if summary.passed else EXIT_FAIL), msg, {}


def cmd_fuzz(cfg, out):
    seed = 0 if cfg.seed is None else cfg.seed
    trials = 1000 if cfg.trials is None else cfg.trials
    mode = {"safe": EtaMode.SAFE, "danger": EtaMode.DANGER}.get(cfg.mode or "safe", None)
    mode = mode or EtaMode(cfg.mode)
    family = cfg.family or "pq1d"
    recs = fuzz_convexity(seed, trials, mode, family, cfg.steps or 200, cfg.workers or 1)
    _io.write_jsonl(out / "violations.jsonl", recs)
    hist = run_length_histogram(recs)
    nonmono = sum(not r["monotone"] for r in recs)
    summary = {
        "seed": seed, "trials": trials, "mode": mode.value, "family": family,
        "violating_trials": len(recs), "run_length_histogram": hist,
        "max_run": max(hist) if hist else 0,
        "multi_violation_trials": sum(r["violation_count"] > 1 for r in recs),
        "non_monotone_violations": nonmono,
    }
    _io.write_json(out / "fuzz_summary.json", summary)
    failed = (mode is EtaMode.SAFE and recs) or nonmono
    msg = (
        f"{mode.value} fuzz over {trials} {family} trials: {len(recs)} non-convex curves; "
        f"run lengths {hist or '{}'}; trials with >1 violation: {summary['multi_violation_trials']}"
    )
    return (EXIT_FAIL if failed else EXIT_OK), msg, {}


HANDLERS = {
    "run-gd": cmd_run_gd,
    "run-flow": cmd_run_flow,
    "scan": cmd_scan,
    "counterexample": cmd_counterexample,
    "verify": cmd_verify,
    "fuzz": cmd_fuzz,
}


def dispatch(cfg):
    """Run one configured command; returns the exit status."""
    out = Path(cfg.out)
    try:
        status, msg, extra = HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, UnsupportedError, OutOfRangeError, ValueError, KeyError) as exc:
        print(f"usage error: precondition violated: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out.mkdir(parents=True, exist_ok=True)
    # artifacts omit the output location so reruns elsewhere compare byte-for-byte
    (out / "config.txt").write_text(cfg.to_text(include_out=False))
    echo = cfg.as_dict()
    del echo["out"]
    meta = {
        "command": cfg.command,
        "config": echo,
        "version": __version__,
        "tolerances": {"tol0": _tol0(cfg), "flow_slope_tol": 1e-9},
        "exit_status": status,
    }
    meta.update(extra)
    _io.write_json(out / "metadata.json", meta)
    print(msg)
    return status


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
