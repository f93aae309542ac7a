"""Command-line entry point: ``gauge-ot distance|geodesic|verify|export``.

Exit codes: 0 success, 1 input error, 2 solver non-convergence or shock
(the result file is still written), 3 verification failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bvp import SPACES, BvpProblem, path_relax, shoot
from .errors import CFLError, DegenerateDensity, GaugeOTError, NoConvergence, ShockTime
from .fiber import project_flavor, trace
from .fields_io import (ManifestError, grid_from_dict, grid_to_dict, load_trajectory, read_field,
                        save_trajectory, trajectory_diagnostics, write_diagnostics, write_field, snapshot_name)
from .matrix import (MatrixGeodesicState, check_positive, factorize, horizontal_from_P,
                     integrate_geodesic_matrix_alternative, integrate_geodesic_matrix_balanced,
                     integrate_geodesic_matrix_unbalanced)
from .vector import (VectorGeodesicState, horizontal_from_theta, integrate_geodesic_vector, mass,
                     polar_decompose)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

SYSTEMS = {
    "vector-balanced": ("vector", "so"),
    "vector-unbalanced": ("vector", "conf"),
    "matrix-unbalanced": ("matrix", "gl"),
    "matrix-balanced": ("matrix", "pgl"),
    "matrix-alternative": ("matrix", "gl"),
}

SOLVER_OPTIONS = {"steps": int, "penalty": float, "rounds": int, "max_iter": int, "gtol": float,
                  "shoot_modes": int, "shoot_steps": int, "commutator": bool, "refresh": int,
                  "ftol": float, "memory": int, "max_jacobian_rows": int}


class InputError(Exception):
    """Invalid problem input; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# -- problem files -------------------------------------------------------------

def load_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputError("problem", f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno} column {exc.colno}", f"malformed JSON ({exc.msg})") from None


def _require(doc, key, where=""):
    if not isinstance(doc, dict) or key not in doc:
        raise InputError(where + key, "missing required field")
    return doc[key]


def parse_grid(doc):
    g = _require(doc, "grid")
    if not isinstance(g, dict):
        raise InputError("grid", "must be an object with dim, sizes, lengths")
    sizes = _require(g, "sizes", "grid.")
    if not isinstance(sizes, list) or not all(isinstance(n, int) for n in sizes):
        raise InputError("grid.sizes", "must be a list of integers")
    try:
        return grid_from_dict(g)
    except (ValueError, TypeError) as exc:
        raise InputError("grid", str(exc)) from None


def parse_k(doc):
    k = _require(doc, "k")
    if not isinstance(k, int) or k < 1:
        raise InputError("k", "must be a positive integer")
    return k


def parse_array(spec, grid, value_shape, field, base):
    """Inline row-major array or a CSV path (relative to the problem file)."""
    ncomp = int(np.prod(value_shape))
    if isinstance(spec, str):
        path = Path(spec) if Path(spec).is_absolute() else base / spec
        if not path.is_file():
            raise InputError(field, f"CSV file not found: {path}")
        try:
            return read_field(path, grid, value_shape)
        except ValueError as exc:
            raise InputError(field, str(exc)) from None
    try:
        arr = np.asarray(spec, dtype=float).ravel()
    except (TypeError, ValueError):
        raise InputError(field, "must be a numeric array or a CSV path") from None
    if arr.size != grid.ncells * ncomp:
        raise InputError(field, f"expected {grid.ncells} x {ncomp} = {grid.ncells * ncomp} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError(field, "non-finite entries")
    return arr.reshape(grid.shape + tuple(value_shape))


def check_endpoint(grid, space, y, field):
    kind, flavor = SPACES[space]
    try:
        if kind == "vector":
            polar_decompose(y)
            if flavor == "so" and abs(mass(grid, y) - 1.0) > 1e-10:
                raise InputError(field, f"integral of |w|^2 is {mass(grid, y):.12g}, expected 1")
        else:
            if np.max(np.abs(y - np.swapaxes(y, -1, -2))) > 1e-12:
                raise InputError(field, "matrix values are not symmetric")
            check_positive(y)
            if flavor == "pgl" and abs(float(grid.integrate(trace(y))) - 1.0) > 1e-10:
                raise InputError(field, "integral of tr(Sigma) must be 1")
    except DegenerateDensity as exc:
        raise InputError(field, str(exc)) from None


def parse_distance_problem(path):
    path = Path(path)
    doc = load_json(path)
    version = _require(doc, "version")
    if str(version) != "1":
        raise InputError("version", f"unsupported version {version!r}")
    grid = parse_grid(doc)
    k = parse_k(doc)
    space = _require(doc, "space")
    if space not in SPACES:
        raise InputError("space", f"must be one of {sorted(SPACES)}")
    vshape = (k,) if SPACES[space][0] == "vector" else (k, k)
    ends = _require(doc, "endpoints")
    if not isinstance(ends, list) or len(ends) != 2:
        raise InputError("endpoints", "must be a list of two arrays or CSV paths")
    ys = []
    for i, e in enumerate(ends):
        y = parse_array(e, grid, vshape, f"endpoints[{i}]", path.parent)
        check_endpoint(grid, space, y, f"endpoints[{i}]")
        ys.append(y)
    opts = doc.get("solver", {}) or {}
    if not isinstance(opts, dict):
        raise InputError("solver", "must be an object")
    kw = {}
    for key, val in opts.items():
        if key not in SOLVER_OPTIONS:
            raise InputError(f"solver.{key}", f"unknown option; known: {sorted(SOLVER_OPTIONS)}")
        try:
            kw[key] = SOLVER_OPTIONS[key](val)
        except (TypeError, ValueError):
            raise InputError(f"solver.{key}", f"cannot convert {val!r}") from None
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise InputError("seed", "must be an integer")
    return doc, BvpProblem(space, grid, ys[0], ys[1], seed=seed, **kw)


def parse_geodesic_problem(path, system):
    path = Path(path)
    doc = load_json(path)
    version = _require(doc, "version")
    if str(version) != "1":
        raise InputError("version", f"unsupported version {version!r}")
    grid = parse_grid(doc)
    k = parse_k(doc)
    init = _require(doc, "initial_state")
    if not isinstance(init, dict):
        raise InputError("initial_state", "must be an object")
    kind, flavor = SYSTEMS[system]
    base = path.parent

    def get(name, shape, default=None):
        if name in init:
            return parse_array(init[name], grid, shape, f"initial_state.{name}", base)
        return default

    try:
        u = get("u", (grid.dim,), np.zeros(grid.shape + (grid.dim,)))
        if kind == "vector":
            w = get("w", (k,))
            if w is None:
                raise InputError("initial_state.w", "missing required field")
            polar_decompose(w)
            theta = get("theta", (k,))
            if theta is not None:
                u, a = horizontal_from_theta(grid, theta, w, flavor)
            else:
                a = get("a", (k, k), np.zeros(grid.shape + (k, k)))
            a = project_flavor(a, flavor)
            return doc, grid, VectorGeodesicState(u, a, w, 0.0, flavor)
        Sigma = get("Sigma", (k, k))
        if Sigma is None:
            S, rho = get("S", (k, k)), get("rho", ())
            if S is None or rho is None:
                raise InputError("initial_state.Sigma", "give Sigma, or both S and rho")
            Sigma = S * rho[..., None, None]
        S, rho = factorize(Sigma)
        P = get("P", (k, k))
        if P is not None:
            u, a = horizontal_from_P(grid, P, Sigma)
        else:
            a = get("a", (k, k), np.zeros(grid.shape + (k, k)))
        if flavor == "pgl":
            a = project_flavor(a, "pgl", S)
        return doc, grid, MatrixGeodesicState(u, a, S, rho, 0.0, flavor)
    except DegenerateDensity as exc:
        raise InputError("initial_state", str(exc)) from None


# -- result files ----------------------------------------------------------------

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_result(path, result):
    if path is None:
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")


def _base_result(command, inputs, seed=None):
    return {"command": command, "version": __version__, "inputs": inputs, "seed": seed, "timings": {}}


def _emit(result, out):
    write_result(out, result)
    if out is None:
        print(json.dumps(result, indent=2, sort_keys=True))


# -- commands ----------------------------------------------------------------------

def cmd_distance(args):
    doc, prob = parse_distance_problem(args.problem)
    inputs = {"problem": str(args.problem), "problem_sha256": _sha256(args.problem), "solver": args.solver,
              "space": prob.space, "grid": grid_to_dict(prob.grid), "k": prob.k,
              "options": doc.get("solver", {})}
    result = _base_result("distance", inputs, prob.seed)
    solvers = ["shoot", "relax"] if args.solver == "both" else [args.solver]
    code = EXIT_OK
    values = {}
    for name in solvers:
        t0 = time.perf_counter()
        entry = {}
        try:
            sol = shoot(prob) if name == "shoot" else path_relax(prob)
            entry = sol.to_dict()
            entry["endpoint_residual_relative"] = sol.endpoint_residual / max(
                float(np.sqrt(prob.grid.cell_volume * np.sum(prob.endpoint1 ** 2))), 1e-300)
            values[name] = sol.distance_sq
            if not sol.converged:
                code = EXIT_SOLVER
        except (ShockTime, CFLError, NoConvergence, DegenerateDensity) as exc:
            entry = {"error": type(exc).__name__, "message": str(exc), "converged": False}
            if getattr(exc, "time", None) is not None:
                entry["time"] = exc.time
            code = EXIT_SOLVER
        result["timings"][name] = time.perf_counter() - t0
        result[name] = entry
    if len(values) == 2:
        a, b = values["shoot"], values["relax"]
        result["relative_gap"] = abs(a - b) / max(abs(a), abs(b), 1e-300)
    if len(values) >= 1:
        result["distance_sq"] = values.get("shoot", values.get("relax"))
    ref = doc.get("reference", {}) if isinstance(doc.get("reference"), dict) else {}
    if "distance_sq" in ref and "distance_sq" in result:
        r = float(ref["distance_sq"])
        result["reference"] = {"distance_sq": r,
                               "relative_error": {n: abs(v - r) / max(abs(r), 1e-300) for n, v in values.items()}}
    _emit(result, args.out)
    return code


def integrate_system(grid, state, system, T, steps, method):
    if system.startswith("vector"):
        if method is None:
            method = "characteristics" if system == "vector-balanced" else "eulerian"
        return integrate_geodesic_vector(grid, state, T, steps, method=method)
    if system == "matrix-unbalanced":
        return integrate_geodesic_matrix_unbalanced(grid, state, T, steps)
    if system == "matrix-balanced":
        return integrate_geodesic_matrix_balanced(grid, state, T, steps, method=method or "characteristics")
    return integrate_geodesic_matrix_alternative(grid, state, T, steps)


def conservation_summary(rows):
    m = np.array([r["mass"] for r in rows])
    e = np.array([r["energy"] for r in rows])
    c = np.array([r["constraint_drift"] for r in rows])
    return {"mass_drift": float(np.max(np.abs(m - m[0]))),
            "energy_drift_relative": float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300)),
            "max_constraint": float(np.max(c))}


def cmd_geodesic(args):
    doc, grid, state = parse_geodesic_problem(args.problem, args.system)
    inputs = {"problem": str(args.problem), "problem_sha256": _sha256(args.problem), "system": args.system,
              "T": args.T, "steps": args.steps, "method": args.method, "grid": grid_to_dict(grid)}
    result = _base_result("geodesic", inputs, doc.get("seed", 0))
    if args.steps < 1 or args.T <= 0:
        raise InputError("--steps/--T", "need steps >= 1 and T > 0")
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        traj = integrate_system(grid, state, args.system, args.T, args.steps, args.method)
    except (ShockTime, CFLError, DegenerateDensity) as exc:
        result.update(error=type(exc).__name__, message=str(exc), failing_time=getattr(exc, "time", None))
        result["timings"]["integrate"] = time.perf_counter() - t0
        _emit(result, args.out)
        return EXIT_SOLVER
    result["timings"]["integrate"] = time.perf_counter() - t0
    out_dir = Path(args.out_dir)
    rows = save_trajectory(out_dir, grid, traj, args.system, {"T": args.T, "method": args.method})
    result["trajectory_dir"] = str(out_dir)
    result["conservation"] = conservation_summary(rows)
    result["conservation"]["per_step"] = [{k: r[k] for k in ("t", "mass", "energy", "constraint_drift")}
                                          for r in rows]
    _emit(result, args.out if args.out else out_dir / "result.json")
    return code


def cmd_verify(args):
    t0 = time.perf_counter()
    rep = run_suite(args.suite, args.seed, args.size)
    sys.stdout.write(rep.text())
    result = _base_result("verify", {"suite": args.suite, "size": args.size}, args.seed)
    result["report"] = rep.to_dict()
    result["timings"]["total"] = time.perf_counter() - t0
    write_result(args.out, result)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_export(args):
    src = Path(args.state_dir)
    try:
        grid, states, manifest = load_trajectory(src)
    except ManifestError as exc:
        raise InputError("state_dir", str(exc)) from None
    out = Path(args.out_dir) if args.out_dir else src.with_name(src.name + "_export")
    if out.resolve() == src.resolve():
        raise InputError("--out-dir", "must differ from the input directory")
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(states):
        d = out / snapshot_name(i)
        d.mkdir(exist_ok=True)
        names = ("u", "a", "w") if isinstance(s, VectorGeodesicState) else ("u", "a", "S", "rho")
        for name in names:
            write_field(d / f"{name}.csv", grid, getattr(s, name), name)
    rows = trajectory_diagnostics(grid, states, manifest.get("system"))
    write_diagnostics(out / "diagnostics.csv", rows)
    print(f"exported {len(states)} snapshots to {out}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="gauge-ot", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("distance", help="squared distance between two endpoints")
    d.add_argument("problem")
    d.add_argument("--solver", choices=("shoot", "relax", "both"), default="both")
    d.add_argument("--out", default=None, help="result JSON (stdout if omitted)")
    d.set_defaults(func=cmd_distance)

    g = sub.add_parser("geodesic", help="integrate a geodesic from an initial state")
    g.add_argument("problem")
    g.add_argument("--T", type=float, default=1.0)
    g.add_argument("--steps", type=int, default=32)
    g.add_argument("--system", choices=tuple(SYSTEMS), default="vector-balanced")
    g.add_argument("--method", choices=("characteristics", "eulerian"), default=None)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--out", default=None, help="result JSON (default: OUT_DIR/result.json)")
    g.set_defaults(func=cmd_geodesic)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--size", choices=("small", "medium"), default="small")
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export", help="export a state or trajectory directory as CSV")
    e.add_argument("state_dir")
    e.add_argument("--format", choices=("csv",), default="csv")
    e.add_argument("--out-dir", default=None)
    e.set_defaults(func=cmd_export)
    return p


def _thread_cap():
    value = os.environ.get("GAUGE_OT_THREADS")
    if not value:
        return os.cpu_count() or 1
    try:
        return max(1, int(value))
    except ValueError:
        raise InputError("GAUGE_OT_THREADS", f"not an integer: {value!r}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(limits=_thread_cap()):
            return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GaugeOTError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
