"""Look for curves that stay concave for more than one step.

Runs the danger-regime fuzzer over every 1-D family and tallies run lengths
of consecutive convexity violations.

    python3 scripts/fuzz_consecutive.py --trials 20000 --workers 4
"""
import argparse
from pathlib import Path

from optcurve import _io
from optcurve.experiments import FUZZ_FAMILIES, EtaMode, fuzz_convexity, run_length_histogram


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/fuzz")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)

    summary = {}
    for family in FUZZ_FAMILIES:
        recs = fuzz_convexity(args.seed, args.trials, EtaMode.DANGER, family, args.steps, args.workers)
        _io.write_jsonl(out / f"violations_{family}.jsonl", recs)
        hist = run_length_histogram(recs)
        summary[family] = {
            "violating_trials": len(recs),
            "run_length_histogram": hist,
            "multi_violation_trials": sum(r["violation_count"] > 1 for r in recs),
            "all_monotone": all(r["monotone"] for r in recs),
        }
        print(f"{family:>9}: {len(recs)}/{args.trials} non-convex, run lengths {hist}")
    _io.write_json(out / "summary.json", {"seed": args.seed, "trials": args.trials, "families": summary})


if __name__ == "__main__":
    main()
