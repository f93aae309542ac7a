import json

import numpy as np
import pytest

from gauge_ot.cli import main
from gauge_ot.fields_io import grid_to_dict, read_diagnostics, write_field
from gauge_ot.fiber import sym
from gauge_ot.fixtures import random_matrix_density, random_vector_half_density
from gauge_ot.grid import PeriodicGrid, random_field

G = PeriodicGrid((16,))
G64 = PeriodicGrid((64,))   # characteristics conserve mass to 1e-8 from about 64 cells


def _flat(x):
    return [float(v) for v in np.asarray(x).ravel()]


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def _pair_doc(w0, w1, **kw):
    return {"version": "1", "grid": grid_to_dict(G), "k": w0.shape[-1], "space": "vhprob",
            "endpoints": [_flat(w0), _flat(w1)], "seed": 0, **kw}


def _vector_geodesic_doc(rng, amplitude=0.015, k=2):
    w = random_vector_half_density(G64, k, rng)
    theta = amplitude * random_field(G64, (k,), rng)
    return {"version": "1", "grid": grid_to_dict(G64), "k": k, "initial_state": {"w": _flat(w), "theta": _flat(theta)}}


def _matrix_geodesic_doc(rng):
    Sigma = random_matrix_density(G64, 2, rng)
    P = 0.02 * sym(random_field(G64, (2, 2), rng))
    return {"version": "1", "grid": grid_to_dict(G64), "k": 2, "initial_state": {"Sigma": _flat(Sigma), "P": _flat(P)}}


# -- distance --------------------------------------------------------------------------

def test_distance_identical_endpoints(tmp_path, rng):
    w = random_vector_half_density(G, 2, rng)
    prob = _write(tmp_path / "p.json", _pair_doc(w, w))
    out = tmp_path / "r.json"
    assert main(["distance", str(prob), "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["distance_sq"] == 0.0
    assert res["shoot"]["converged"] and res["relax"]["converged"]
    assert len(res["inputs"]["problem_sha256"]) == 64


def test_distance_with_reference_and_csv_endpoint(tmp_path, rng):
    w = random_vector_half_density(G, 2, rng)
    write_field(tmp_path / "w.csv", G, w)
    doc = _pair_doc(w, w, reference={"distance_sq": 0.0})
    doc["endpoints"][1] = "w.csv"
    prob = _write(tmp_path / "p.json", doc)
    out = tmp_path / "r.json"
    assert main(["distance", str(prob), "--solver", "shoot", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert "relax" not in res and "reference" in res


def test_distance_does_not_mutate_input(tmp_path, rng):
    w = random_vector_half_density(G, 2, rng)
    prob = _write(tmp_path / "p.json", _pair_doc(w, w))
    before = prob.read_bytes()
    main(["distance", str(prob), "--solver", "shoot", "--out", str(tmp_path / "r.json")])
    assert prob.read_bytes() == before


def test_distance_is_deterministic(tmp_path, rng):
    w0 = random_vector_half_density(G, 2, rng)
    a = np.array([[0.0, -0.2], [0.2, 0.0]])
    w1 = w0 @ np.linalg.matrix_power(np.eye(2) + a / 8, 8).T
    w1 /= np.sqrt(G.integrate(np.sum(w1 * w1, -1)))
    prob = _write(tmp_path / "p.json", _pair_doc(w0, w1, solver={"steps": 4}))
    results = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        main(["distance", str(prob), "--solver", "relax", "--out", str(out)])
        res = json.loads(out.read_text())
        results.append(res["relax"])
    assert results[0] == results[1]


def test_malformed_json(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text('{"version": "1",\n "grid": }')
    assert main(["distance", str(prob)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_missing_problem_file(tmp_path):
    assert main(["distance", str(tmp_path / "nope.json")]) == 1


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(endpoints=[d["endpoints"][0], d["endpoints"][1][:-1]]),
    lambda d: d.update(space="unknown"),
    lambda d: d.update(version="9"),
    lambda d: d.update(solver={"no_such_option": 1}),
    lambda d: d["endpoints"][0].__setitem__(0, float("nan")),
    lambda d: d.pop("grid"),
], ids=["length", "space", "version", "option", "nan", "grid"])
def test_invalid_problems_exit_1(tmp_path, rng, mutate):
    w = random_vector_half_density(G, 2, rng)
    doc = _pair_doc(w, w)
    mutate(doc)
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps(doc, allow_nan=True))
    assert main(["distance", str(prob), "--out", str(tmp_path / "r.json")]) == 1


def test_unnormalized_probability_endpoint_rejected(tmp_path, rng):
    w = random_vector_half_density(G, 2, rng)
    prob = _write(tmp_path / "p.json", _pair_doc(w, 2 * w))
    assert main(["distance", str(prob)]) == 1


def test_thread_variable_validated(tmp_path, rng, monkeypatch):
    w = random_vector_half_density(G, 2, rng)
    prob = _write(tmp_path / "p.json", _pair_doc(w, w))
    monkeypatch.setenv("GAUGE_OT_THREADS", "many")
    assert main(["distance", str(prob), "--solver", "shoot"]) == 1


# -- geodesic ------------------------------------------------------------------------------

@pytest.mark.parametrize("system", ["vector-balanced", "vector-unbalanced", "matrix-unbalanced",
                                    "matrix-balanced", "matrix-alternative"])
def test_geodesic_systems(tmp_path, rng, system):
    doc = _vector_geodesic_doc(rng) if system.startswith("vector") else _matrix_geodesic_doc(rng)
    prob = _write(tmp_path / "p.json", doc)
    out_dir = tmp_path / "traj"
    assert main(["geodesic", str(prob), "--system", system, "--T", "0.5", "--steps", "4",
                 "--out-dir", str(out_dir)]) == 0
    res = json.loads((out_dir / "result.json").read_text())
    assert len(res["conservation"]["per_step"]) == 5
    rows = read_diagnostics(out_dir / "diagnostics.csv")
    assert [r["step"] for r in rows] == list(range(5))
    if system in ("vector-balanced", "matrix-balanced"):
        assert res["conservation"]["mass_drift"] <= 1e-8


def test_geodesic_shock_exit_2(tmp_path):
    w = np.ones((16, 1))
    theta = 0.5 * np.cos(2 * np.pi * G.coords()[0])[:, None] / (2 * np.pi)
    doc = {"version": "1", "grid": grid_to_dict(G), "k": 1, "initial_state": {"w": _flat(w), "theta": _flat(theta)}}
    prob = _write(tmp_path / "p.json", doc)
    out = tmp_path / "r.json"
    assert main(["geodesic", str(prob), "--T", "4", "--steps", "4", "--out-dir", str(tmp_path / "t"),
                 "--out", str(out)]) == 2
    res = json.loads(out.read_text())
    assert res["error"] == "ShockTime" and res["failing_time"] is not None


def test_geodesic_rejects_bad_steps(tmp_path, rng):
    prob = _write(tmp_path / "p.json", _vector_geodesic_doc(rng))
    assert main(["geodesic", str(prob), "--steps", "0", "--out-dir", str(tmp_path / "t")]) == 1


# -- export ----------------------------------------------------------------------------------

def test_export_round_trip(tmp_path, rng):
    prob = _write(tmp_path / "p.json", _vector_geodesic_doc(rng))
    traj = tmp_path / "traj"
    assert main(["geodesic", str(prob), "--T", "0.5", "--steps", "2", "--out-dir", str(traj)]) == 0
    out = tmp_path / "exp"
    assert main(["export", str(traj), "--out-dir", str(out)]) == 0
    for step in ("step_00000", "step_00002"):
        for name in ("u.csv", "a.csv", "w.csv"):
            assert (out / step / name).read_text() == (traj / step / name).read_text()
    assert len(read_diagnostics(out / "diagnostics.csv")) == 3


def test_export_missing_manifest(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["export", str(tmp_path / "empty"), "--out-dir", str(tmp_path / "x")]) == 1


def test_export_refuses_in_place(tmp_path, rng):
    prob = _write(tmp_path / "p.json", _vector_geodesic_doc(rng))
    traj = tmp_path / "traj"
    main(["geodesic", str(prob), "--T", "0.5", "--steps", "2", "--out-dir", str(traj)])
    assert main(["export", str(traj), "--out-dir", str(traj)]) == 1


# -- verify ------------------------------------------------------------------------------------

def test_verify_duality_suite(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "duality", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "FAIL" not in text
    assert json.loads(out.read_text())["report"]["passed"] is True


def test_verify_is_deterministic(capsys):
    main(["verify", "--suite", "submersion", "--seed", "3"])
    first = capsys.readouterr().out
    main(["verify", "--suite", "submersion", "--seed", "3"])
    assert capsys.readouterr().out == first
