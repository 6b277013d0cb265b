import csv
import io
import json

import numpy as np
import pytest

from hcsparse.cli import main
from hcsparse.errors import InvalidInputError
from hcsparse.frame import orthonormal_basis_frame, random_unit_frame, sparsity_bound
from hcsparse.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    plant_instance,
    records_to_csv,
    run_nsp_consistency,
    run_recovery_sweep,
)
from hcsparse.module import norm0, norm2
from hcsparse.serialize import (
    frame_from_json,
    frame_to_json,
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)


def test_plant_instance_contract():
    F = random_unit_frame(2, 3, 6, 0)
    with pytest.raises(InvalidInputError):
        plant_instance(F, 0)
    c, x = plant_instance(F, 6, "ginibre", 1)
    assert norm0(c) == 6
    for dist in ("ginibre", "unitary"):
        c, x = plant_instance(F, 2, dist, 3)
        assert norm0(c) == 2
        assert norm2(F.synthesis(c) - x) <= 1e-12
    c1, x1 = plant_instance(F, 3, "unitary", 7)
    c2, x2 = plant_instance(F, 3, "unitary", 7)
    assert c1.tobytes() == c2.tobytes() and x1.tobytes() == x2.tobytes()
    with pytest.raises(InvalidInputError):
        plant_instance(F, 1, "scalar-gaussian", 0)
    G = random_unit_frame(1, 3, 5, 0)
    c, _ = plant_instance(G, 2, "scalar-gaussian", 0)
    assert np.all(c.imag == 0) and norm0(c) == 2


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ExperimentConfig(k=1, m=2, n=3, sparsity_list=[4])
    with pytest.raises(InvalidInputError):
        ExperimentConfig(k=1, m=2, n=3, trials=0)
    with pytest.raises(InvalidInputError):
        ExperimentConfig.from_dict({"k": 1, "m": 2, "n": 3, "bogus": 1})
    with pytest.raises(InvalidInputError):
        ExperimentConfig(k=1, m=2, n=3, solver={"nope": 1})


def test_sweep_small_and_records_consistent():
    cfg = ExperimentConfig(k=1, m=8, n=12, sparsity_list=[1], trials=50, seed=3)
    records, summary = run_recovery_sweep(cfg)
    assert len(records) == 50
    for r in records:
        assert r.bound_satisfied == (r.s < sparsity_bound(r.mu))
        assert r.bound == sparsity_bound(r.mu)
    sat = summary["strata"]["bound_satisfied"]
    assert sat["trials"] == 50
    assert sat["bp_success_rate"] == 1.0 and sat["oracle_success_rate"] == 1.0
    assert summary["theorem_holds"]


def test_sweep_far_above_bound_records_without_assertion():
    cfg = ExperimentConfig(k=2, m=2, n=5, sparsity_list=[4], trials=3, seed=1)
    records, summary = run_recovery_sweep(cfg)
    assert all(not r.bound_satisfied for r in records)
    assert summary["strata"]["bound_satisfied"]["trials"] == 0


def test_sweep_empty_sparsity_list():
    records, summary = run_recovery_sweep(ExperimentConfig(k=1, m=2, n=3, sparsity_list=[], trials=2))
    assert records == [] and summary["records"] == 0
    assert records_to_csv(records).strip() == ",".join(CSV_COLUMNS)


def test_sweep_csv_deterministic(tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"run{i}.csv"
        cfg = ExperimentConfig(
            k=2, m=3, n=6, sparsity_list=[1, 2], trials=4, seed=11, csv_path=str(p),
            summary_path=str(tmp_path / f"sum{i}.json"),
        )
        run_recovery_sweep(cfg)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = list(csv.DictReader(io.StringIO(paths[0].read_text())))
    assert list(rows[0]) == CSV_COLUMNS and len(rows) == 8
    # 17 significant digits round-trip the stored coherence
    F = random_unit_frame(2, 3, 6, np.random.default_rng(np.random.SeedSequence((11, 0, 0))))
    assert float(rows[0]["mu"]) == F.coherence
    summary = json.loads((tmp_path / "sum0.json").read_text())
    assert summary["records"] == 8


def test_nsp_consistency_duplicated():
    rep = run_nsp_consistency(ExperimentConfig(k=2, m=3, n=5, trials=3, frame_family="duplicated", nsp_samples=200))
    assert rep["witnesses_by_order"]["1"] == 3
    assert rep["pairs_verified"] >= 3
    assert rep["certified_orders"] == {"0": 3}


def test_nsp_consistency_random_frames():
    rep = run_nsp_consistency(ExperimentConfig(k=1, m=4, n=7, trials=5, nsp_samples=2000))
    assert rep["witnesses_at_certified_orders"] == 0
    assert sum(rep["certified_orders"].values()) == 5


def test_nsp_consistency_orthonormal_basis():
    rep = run_nsp_consistency(ExperimentConfig(k=2, m=4, n=4, trials=2, frame_family="basis_plus_flat", nsp_samples=100))
    assert rep["trivial_kernel_frames"] == 2
    assert rep["witnesses_by_order"] == {} and rep["certified_orders"] == {"4": 2}


# -- serialization ----------------------------------------------------------


def test_matrix_json_round_trip(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    obj = matrix_to_json(a)
    assert obj[0][1] == [a[0, 1].real, a[0, 1].imag]
    assert np.array_equal(matrix_from_json(obj), a)
    with pytest.raises(InvalidInputError):
        matrix_from_json([[1, 2], [3, 4]])


def test_vector_and_frame_json_round_trip(rng):
    F = random_unit_frame(2, 3, 5, 0)
    G = frame_from_json(json.loads(json.dumps(frame_to_json(F))))
    assert np.array_equal(F.vectors, G.vectors)
    x = F.vectors[0]
    obj = vector_to_json(x, length_key="m")
    assert obj["m"] == 3 and obj["k"] == 2
    assert np.array_equal(vector_from_json(obj), x)
    with pytest.raises(InvalidInputError):
        frame_from_json({"k": 2, "m": 3, "n": 4, "vectors": frame_to_json(F)["vectors"]})


# -- CLI --------------------------------------------------------------------


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_cli_coherence(tmp_path, capsys, micro):
    path = _write(tmp_path / "f.json", frame_to_json(micro))
    assert main(["coherence", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["coherence"] == pytest.approx(2**-0.5, abs=1e-12)
    assert out["sparsity_bound"] == pytest.approx(0.5 * (1 + 2**0.5), abs=1e-12)
    assert out["frame_bounds"] == pytest.approx([1, 2], abs=1e-10)
    assert out["certified_order"] == 1


def test_cli_coherence_orthonormal_infinite_bound(tmp_path, capsys):
    path = _write(tmp_path / "f.json", frame_to_json(orthonormal_basis_frame(2, 3)))
    assert main(["coherence", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["sparsity_bound"] is None and out["certified_order"] == 3


def test_cli_recover_both_solvers(tmp_path, capsys, micro):
    f = _write(tmp_path / "f.json", frame_to_json(micro))
    x = _write(tmp_path / "x.json", vector_to_json(micro.vectors[2], length_key="m"))
    assert main(["recover", f, x]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "converged"
    sol = vector_from_json(out["solution"]).ravel()
    assert np.allclose(sol, [0, 0, 1], atol=1e-6)
    assert main(["recover", f, x, "--solver", "oracle"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["min_cardinality"] == 1 and out["supports"] == [[3]] and out["unique"] is True


def test_cli_recover_nonconvergence_exit(tmp_path, capsys, rng):
    F = random_unit_frame(2, 3, 6, 0)
    f = _write(tmp_path / "f.json", frame_to_json(F))
    x = _write(tmp_path / "x.json", vector_to_json(rng.standard_normal((3, 2, 2)), length_key="m"))
    assert main(["recover", f, x, "--max-iters", "2"]) == 3


def test_cli_invalid_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["coherence", str(bad)]) == 2
    assert main(["coherence", str(tmp_path / "missing.json")]) == 2
    assert main(["nonsense"]) == 2


def test_cli_gen_frame(capsys):
    assert main(["gen-frame", "--k", "2", "--m", "3", "--n", "5", "--seed", "4"]) == 0
    F = frame_from_json(json.loads(capsys.readouterr().out))
    assert np.array_equal(F.vectors, random_unit_frame(2, 3, 5, 4).vectors)


def test_cli_sweep_and_nsp_check(tmp_path, capsys):
    cfg = {"k": 1, "m": 4, "n": 6, "sparsity_list": [1], "trials": 3, "seed": 5,
           "csv_path": str(tmp_path / "out.csv"), "summary_path": str(tmp_path / "sum.json")}
    assert main(["sweep", _write(tmp_path / "c.json", cfg)]) == 0
    assert (tmp_path / "out.csv").read_text().startswith("trial,s,mu")
    ncfg = {"k": 2, "m": 3, "n": 5, "trials": 2, "frame_family": "duplicated", "nsp_samples": 100}
    assert main(["nsp-check", _write(tmp_path / "n.json", ncfg)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pairs_verified"] > 0


def test_cli_nsp_check_fatal_exit(tmp_path, monkeypatch):
    import hcsparse.harness as harness
    from hcsparse.nsp import NspWitness

    def fake(F, orders, *a, **kw):
        d = np.zeros((F.n, F.k, F.k), dtype=complex)
        return {s: NspWitness(s, d, (0,), 0.0, 0.0) for s in orders}

    monkeypatch.setattr(harness, "nsp_falsify_orders", fake)
    ncfg = {"k": 1, "m": 4, "n": 6, "trials": 1, "nsp_samples": 10}
    assert main(["nsp-check", _write(tmp_path / "n.json", ncfg)]) == 4
