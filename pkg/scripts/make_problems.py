"""Write example problem files for the ``gauge-ot`` CLI.

Usage: python scripts/make_problems.py OUT_DIR

Creates:
  identical.json          distance between an endpoint and itself
  scalar_pair.json        k = 1 pair with the 1D oracle value as reference
  vector_pair.json        k = 2 balanced pair from a forward geodesic, generating cost as reference
  vector_geodesic.json    initial state (w, theta) for the vector systems
  matrix_geodesic.json    initial state (Sigma, P) for the matrix systems
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from gauge_ot.bvp import wasserstein_1d_oracle
from gauge_ot.fiber import sym
from gauge_ot.fields_io import grid_to_dict
from gauge_ot.fixtures import geodesic_instance, random_matrix_density, random_vector_half_density, scalar_pair
from gauge_ot.grid import PeriodicGrid, random_field


def _doc(grid, k, **kw):
    return {"version": "1", "grid": grid_to_dict(grid), "k": k, **kw}


def _flat(x):
    return [float(v) for v in np.asarray(x).ravel()]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    grid, w0, w1, _ = scalar_pair(args.seed)
    ref = wasserstein_1d_oracle(grid, w0[:, 0] ** 2, w1[:, 0] ** 2)
    files = {
        "identical.json": _doc(grid, 1, space="vhprob", endpoints=[_flat(w0), _flat(w0)], seed=args.seed),
        "scalar_pair.json": _doc(grid, 1, space="vhprob", endpoints=[_flat(w0), _flat(w1)], seed=args.seed,
                                 reference={"distance_sq": ref, "source": "1D quantile oracle"}),
    }
    g2, y0, y1, _, cost = geodesic_instance("vhprob", args.seed)
    files["vector_pair.json"] = _doc(g2, 2, space="vhprob", endpoints=[_flat(y0), _flat(y1)], seed=args.seed,
                                     reference={"distance_sq": cost, "source": "generating geodesic"})
    rng = np.random.default_rng(args.seed)
    g = PeriodicGrid((64,))
    w = random_vector_half_density(g, 2, rng)
    theta = 0.02 * random_field(g, (2,), rng)
    files["vector_geodesic.json"] = _doc(g, 2, initial_state={"w": _flat(w), "theta": _flat(theta)}, seed=args.seed)
    Sigma = random_matrix_density(g, 2, rng)
    P = 0.02 * sym(random_field(g, (2, 2), rng))
    files["matrix_geodesic.json"] = _doc(g, 2, initial_state={"Sigma": _flat(Sigma), "P": _flat(P)},
                                         seed=args.seed)
    for name, doc in files.items():
        (out / name).write_text(json.dumps(doc, indent=1) + "\n")
        print(out / name)


if __name__ == "__main__":
    main()
