"""Text serialisation of fields, geodesic states and trajectories.

Fields are CSV files with one row per cell in row-major order and one column
per component, printed with 17 significant digits so that a write/read cycle
is bit-exact.  States are directories of such files plus ``manifest.json``.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from pathlib import Path

import numpy as np

from .fiber import trace, tr_prod
from .grid import PeriodicGrid
from .matrix import MatrixGeodesicState, bures_energy_matrix
from .vector import VectorGeodesicState, bures_energy, mass

FLOAT_FMT = "%.17g"


class ManifestError(ValueError):
    pass


def grid_to_dict(grid):
    return {"dim": grid.dim, "sizes": list(grid.sizes), "lengths": list(grid.lengths),
            "derivative": grid.derivative}


def grid_from_dict(d):
    sizes = d["sizes"]
    if "dim" in d and int(d["dim"]) != len(sizes):
        raise ValueError(f"grid.dim = {d['dim']} but grid.sizes has {len(sizes)} entries")
    return PeriodicGrid(tuple(sizes), tuple(d["lengths"]) if d.get("lengths") is not None else None,
                        d.get("derivative", "fd"))


def component_names(name, value_shape):
    if not value_shape:
        return [name]
    return [name + "_" + "".join(str(i) for i in idx)
            for idx in itertools.product(*(range(n) for n in value_shape))]


def format_field(grid, f, name="f"):
    """CSV text of field ``f`` (header row plus one row per cell)."""
    f = grid.check_field(np.asarray(f, dtype=float), name=name)
    value_shape = f.shape[grid.dim:]
    rows = f.reshape(grid.ncells, -1)
    out = io.StringIO()
    out.write(",".join(component_names(name, value_shape)) + "\n")
    np.savetxt(out, rows, fmt=FLOAT_FMT, delimiter=",")
    return out.getvalue()


def write_field(path, grid, f, name=None):
    path = Path(path)
    Path(path).write_text(format_field(grid, f, name or path.stem))


def read_field(path, grid, value_shape=None):
    """Read a field CSV; ``value_shape`` defaults to a flat component axis (or scalar)."""
    text = Path(path).read_text()
    header, _, body = text.partition("\n")
    ncol = len(header.split(","))
    data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2, dtype=float)
    if data.shape != (grid.ncells, ncol):
        raise ValueError(f"{path}: expected {grid.ncells} rows x {ncol} columns, got {data.shape}")
    if value_shape is None:
        value_shape = () if ncol == 1 else (ncol,)
    if int(np.prod(value_shape)) != ncol:
        raise ValueError(f"{path}: {ncol} columns do not match value shape {tuple(value_shape)}")
    return data.reshape(grid.shape + tuple(value_shape))


# -- states ------------------------------------------------------------------

def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_state(directory, grid, state):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {"t": float(state.t), "k": int(state.k), "grid": grid_to_dict(grid), "flavor": state.flavor}
    write_field(d / "u.csv", grid, state.u)
    write_field(d / "a.csv", grid, state.a)
    if isinstance(state, VectorGeodesicState):
        write_field(d / "w.csv", grid, state.w)
        manifest.update(kind="vector", balanced=bool(state.balanced))
    else:
        write_field(d / "S.csv", grid, state.S)
        write_field(d / "rho.csv", grid, state.rho)
        manifest.update(kind="matrix", normalized=bool(abs(grid.integrate(state.rho) - 1.0) <= 1e-10))
    _write_json(d / "manifest.json", manifest)


def load_manifest(directory):
    path = Path(directory) / "manifest.json"
    if not path.is_file():
        raise ManifestError(f"missing manifest: {path}")
    return json.loads(path.read_text())


def load_state(directory):
    """Inverse of ``save_state``; returns ``(grid, state)``."""
    d = Path(directory)
    m = load_manifest(d)
    grid = grid_from_dict(m["grid"])
    k = int(m["k"])
    u = read_field(d / "u.csv", grid, (grid.dim,))
    a = read_field(d / "a.csv", grid, (k, k))
    if m.get("kind", "vector") == "vector":
        return grid, VectorGeodesicState(u, a, read_field(d / "w.csv", grid, (k,)), m["t"], m["flavor"])
    S = read_field(d / "S.csv", grid, (k, k))
    rho = read_field(d / "rho.csv", grid, ())
    return grid, MatrixGeodesicState(u, a, S, rho, m["t"], m["flavor"])


# -- trajectories and diagnostics --------------------------------------------

DIAGNOSTIC_COLUMNS = ("step", "t", "mass", "energy", "constraint_drift")


def state_diagnostics(grid, state, system=None):
    """Mass, Bures energy and the constraint monitor of one state.

    The constraint monitor is ``max |tr(a S)|`` for balanced matrix states,
    ``max |tr S - 1|`` for the other matrix systems and the pointwise flavour
    violation of ``a`` for vector states.
    """
    if isinstance(state, VectorGeodesicState):
        a = state.a
        at = np.swapaxes(a, -1, -2)
        if state.flavor == "so":
            viol = a + at
        else:
            k = state.k
            viol = a + at - (2.0 / k) * trace(a)[..., None, None] * np.eye(k)
        return {"mass": mass(grid, state.w), "energy": bures_energy(grid, state.u, state.a, state.w),
                "constraint_drift": float(np.max(np.abs(viol)))}
    Sigma = state.Sigma
    if system == "matrix-alternative":
        uu = np.einsum("...a,...a->...", state.u, state.u)
        energy = float(grid.integrate(uu * state.rho + trace(state.a @ Sigma @ np.swapaxes(state.a, -1, -2))))
    else:
        energy = bures_energy_matrix(grid, state.u, state.a, Sigma, state.flavor)
    if state.flavor == "pgl":
        drift = np.max(np.abs(tr_prod(state.a, state.S)))
    else:
        drift = np.max(np.abs(trace(state.S) - 1.0))
    return {"mass": float(grid.integrate(state.rho)), "energy": energy, "constraint_drift": float(drift)}


def trajectory_diagnostics(grid, traj, system=None):
    rows = []
    for i, s in enumerate(traj):
        row = {"step": i, "t": float(s.t)}
        row.update(state_diagnostics(grid, s, system))
        rows.append(row)
    return rows


def write_diagnostics(path, rows):
    """CSV with a leading '#' comment naming the columns, then a header row."""
    with open(path, "w", newline="") as fh:
        fh.write("# columns: step (index), t (time), mass (total mass), energy (Bures energy), "
                 "constraint_drift (constraint monitor)\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for r in rows:
            writer.writerow([r["step"]] + [FLOAT_FMT % r[c] for c in DIAGNOSTIC_COLUMNS[1:]])


def read_diagnostics(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: (int(v) if k == "step" else float(v)) for k, v in row.items()} for row in reader]


def snapshot_name(i):
    return f"step_{i:05d}"


def save_trajectory(directory, grid, traj, system=None, extra=None):
    """Write every state as ``step_NNNNN/`` plus a top-level manifest and diagnostics."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(traj):
        save_state(d / snapshot_name(i), grid, s)
    rows = trajectory_diagnostics(grid, traj, system)
    write_diagnostics(d / "diagnostics.csv", rows)
    manifest = {"kind": "trajectory", "system": system, "steps": len(traj) - 1,
                "snapshots": [snapshot_name(i) for i in range(len(traj))], "grid": grid_to_dict(grid)}
    if extra:
        manifest.update(extra)
    _write_json(d / "manifest.json", manifest)
    return rows


def load_trajectory(directory):
    d = Path(directory)
    m = load_manifest(d)
    if m.get("kind") != "trajectory":
        grid, s = load_state(d)
        return grid, [s], m
    states = [load_state(d / name)[1] for name in m["snapshots"]]
    return grid_from_dict(m["grid"]), states, m
