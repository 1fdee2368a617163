"""Test-function margins against the leading-order prediction as eps decreases.

    python scripts/eps_sweep.py --alpha 0 --eps 1e-3 1e-5 1e-8 1e-12
"""
import argparse

import numpy as np

from hardy_moser.testfn import run_test_function, solve_constants


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--eps", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5, 1e-6, 1e-8])
    p.add_argument("--alpha", type=float, default=0.0)
    args = p.parse_args()

    cols = ["eps", "c", "B-1/4pi", "c-c_asym", "margin", "predicted", "ratio", "inner/target"]
    print(" ".join(f"{c:>13s}" for c in cols))
    for eps in sorted(args.eps, reverse=True):
        r = run_test_function(eps, args.alpha)
        c_asym = solve_constants(eps, r.A0, "asymptotic")[1]
        row = [eps, r.c, r.B - 1 / (4 * np.pi), r.c - c_asym, r.margin, r.predicted_margin,
               r.margin / r.predicted_margin, r.inner_integral / r.inner_target]
        print(" ".join(f"{v:13.6g}" for v in row))


if __name__ == "__main__":
    main()
