"""Compare the shooting and relaxation solvers on k = 1 pairs against the 1D oracle.

Usage: python scripts/solver_comparison.py [--pairs N] [--steps S]
"""
from __future__ import annotations

import argparse
import time

from gauge_ot.bvp import BvpProblem, path_relax, shoot, wasserstein_1d_oracle
from gauge_ot.fixtures import scalar_pair


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=5)
    ap.add_argument("--steps", type=int, default=32)
    args = ap.parse_args(argv)

    print(f"{'seed':>4} {'oracle':>11} {'shoot':>11} {'relax':>11} {'t_shoot':>8} {'t_relax':>8}")
    for seed in range(args.pairs):
        grid, w0, w1, _ = scalar_pair(seed)
        ref = wasserstein_1d_oracle(grid, w0[:, 0] ** 2, w1[:, 0] ** 2)
        prob = BvpProblem("vhprob", grid, w0, w1, steps=args.steps)
        t0 = time.perf_counter()
        s = shoot(prob)
        t1 = time.perf_counter()
        r = path_relax(prob)
        t2 = time.perf_counter()
        print(f"{seed:4d} {ref:11.4e} {s.distance_sq:11.4e} {r.distance_sq:11.4e} {t1 - t0:8.1f} {t2 - t1:8.1f}")


if __name__ == "__main__":
    main()
