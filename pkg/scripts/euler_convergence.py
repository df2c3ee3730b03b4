"""Euler-path error against the RK4 reference as the step shrinks.

For each objective, records the sup error on [0, R] and the a-priori bound
for a halving sequence of step sizes.

    python3 scripts/euler_convergence.py --out results/euler
"""
import argparse
from pathlib import Path

import numpy as np

from optcurve import _io
from optcurve.flow import euler_error_bound, euler_sup_error
from optcurve.function_zoo import from_id


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/euler")
    ap.add_argument("--fn", action="append",
                    help="function id (repeatable); default quad_diag=1, lse_seed=0_m=4_n=2")
    ap.add_argument("--levels", type=int, default=6)
    args = ap.parse_args()
    ids = args.fn or ["quad_diag=1", "lse_seed=0_m=4_n=2"]

    rows = []
    for fid in ids:
        f = from_id(fid)
        L = f.smoothness_L
        x0 = np.ones(f.dimension)
        K = float(np.linalg.norm(f.gradient(x0)))
        R = 1.0 / L
        prev = None
        for k in range(args.levels):
            eta = min(0.1 / L, 0.5) / 2**k
            err, t = euler_sup_error(f, x0, eta, R)
            ratio = err / prev if prev else float("nan")
            rows.append((fid, eta, err, t, euler_error_bound(K, L, eta, R), ratio))
            print(f"{fid:>20} eta={eta:.6g} sup_err={err:.3e} ratio={ratio:.4f}")
            prev = err
    _io.write_csv(Path(args.out) / "euler_convergence.csv",
                  ["function_id", "eta", "sup_error", "t_at_sup", "bound", "ratio"], rows)


if __name__ == "__main__":
    main()
