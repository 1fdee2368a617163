"""Convergence of A0 on all-geometric grids against the shooting oracle.

    python scripts/green_convergence.py --alpha 0
"""
import argparse

import numpy as np

from hardy_moser.green import shooting_A0, solve_green
from hardy_moser.radial import build_grid

GEOMETRIC = 1.0 - 1e-9


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 4000, 8000, 16000])
    args = p.parse_args()

    oracle = shooting_A0(args.alpha, 1e-8)
    print(f"shooting A0 = {oracle:.14f}")
    prev = None
    for n in args.sizes:
        a0 = solve_green(args.alpha, build_grid(n, grading=GEOMETRIC), "hardy").A0
        err = abs(a0 - oracle)
        rate = "" if prev is None else f"  rate {np.log2(prev / err):.2f}"
        print(f"n={n:6d}  A0={a0:.12f}  error={err:.3e}{rate}")
        prev = err
    print(f"default grid A0 = {solve_green(args.alpha, build_grid(), 'hardy').A0:.12f}")


if __name__ == "__main__":
    main()
