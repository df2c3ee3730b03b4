"""Step-size regime scan for several smoothness constants.

Scans the Huber-type counterexample (rescaled to each L) and the square
function, writing one CSV per run plus a combined threshold table.

    python3 scripts/regime_split.py --out results/regime
"""
import argparse
import math
from pathlib import Path

from optcurve import _io
from optcurve.experiments import eta_scan
from optcurve.function_zoo import make_counterexample, paper_square


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/regime")
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()
    out = Path(args.out)

    rows = []
    cases = [(make_counterexample(L), [-1.8 / math.sqrt(L)]) for L in (0.25, 1.0, 4.0, 16.0)]
    cases.append((paper_square(), [3.0]))
    for f, x0 in cases:
        res = eta_scan(f, x0, grid_size=args.grid, steps=args.steps)
        res.to_csv(out / f"scan_{f.function_id}.csv")
        rows.append((f.function_id, res.L, res.empirical_threshold * res.L, res.theoretical_threshold * res.L,
                     sum(v.convex for v in res.verdicts), len(res.verdicts)))
        print(f"{f.function_id:>14}: threshold*L = {res.empirical_threshold * res.L:.12f}")
    _io.write_csv(out / "thresholds.csv", ["function_id", "L", "threshold_times_L", "theory_times_L",
                                            "convex", "grid"], rows)


if __name__ == "__main__":
    main()
