import json

import numpy as np
import pytest

import filtermc as fm
from filtermc.cli import run

from helpers import random_measure


def make_trivial_model(tmp_path):
    P = fm.TransitionMatrix.from_dense([[0.6, 0.4], [0.3, 0.7]])
    model = fm.FilterModel(fm.Partition.trivial(P), meta={"name": "trivial"})
    path = tmp_path / "trivial.json"
    fm.save_model(model, path)
    return path


def test_gallery_then_nonstability_check(tmp_path, capsys):
    model_path = tmp_path / "k.json"
    assert run(["gallery", "kesten", "--out", str(model_path)]) == 0
    verdict_path = tmp_path / "verdict.json"
    code = run(["check", "--model", str(model_path), "--condition", "thm11",
                "--subset", "0,1,2,3", "--out", str(verdict_path)])
    assert code == 0
    verdict = json.loads(verdict_path.read_text())
    assert verdict["kind"] == "nonstable"
    assert verdict["passed"] is True
    assert verdict["separation"] > 0


def test_gallery_roundtrip_identical_bytes(tmp_path):
    p1 = tmp_path / "m1.json"
    p2 = tmp_path / "m2.json"
    assert run(["gallery", "random-walk", "--out", str(p1)]) == 0
    model = fm.load_model(p1)
    fm.save_model(model, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_simulate_deterministic_bytes(tmp_path):
    model_path = tmp_path / "k.json"
    run(["gallery", "kesten", "--out", str(model_path)])
    t1 = tmp_path / "t1.csv"
    t2 = tmp_path / "t2.csv"
    assert run(["simulate", "--model", str(model_path), "--steps", "100",
                "--seed", "7", "--out", str(t1)]) == 0
    assert run(["simulate", "--model", str(model_path), "--steps", "100",
                "--seed", "7", "--out", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()
    lines = t1.read_text().splitlines()
    assert len(lines) == 102  # header + start row + 100 steps
    assert lines[0].startswith("step,label,x0")


def test_entropy_trivial_model_all_zero(tmp_path, capsys):
    model_path = make_trivial_model(tmp_path)
    out_path = tmp_path / "ent.csv"
    assert run(["entropy", "--model", str(model_path), "--horizon", "5",
                "--bracket", "--out", str(out_path)]) == 0
    rows = out_path.read_text().splitlines()[1:]
    assert len(rows) == 5
    for row in rows:
        fields = row.split(",")
        for v in fields[1:5]:
            assert abs(float(v)) <= 1e-12


def test_entropy_mc_option(tmp_path, capsys):
    model_path = make_trivial_model(tmp_path)
    code = run(["entropy", "--model", str(model_path), "--horizon", "2",
                "--mc", "samples=100", "burn=10", "seed=3",
                "--out", str(tmp_path / "e.csv")])
    assert code == 0
    out = capsys.readouterr().out
    assert "mc_estimate=0" in out


def test_distance_prints_twelve_significant_digits(tmp_path, capsys):
    rng = np.random.default_rng(0)
    mu = random_measure(rng, 3, 2)
    nu = random_measure(rng, 3, 3)
    mu_path = tmp_path / "mu.json"
    nu_path = tmp_path / "nu.json"
    fm.save_measure(mu, mu_path)
    fm.save_measure(nu, nu_path)
    plan_path = tmp_path / "plan.json"
    code = run(["distance", "--mu", str(mu_path), "--nu", str(nu_path),
                "--plan", str(plan_path)])
    assert code == 0
    printed = capsys.readouterr().out.strip()
    d, _ = fm.kantorovich_distance(mu, nu)
    assert float(printed) == pytest.approx(d, rel=1e-11)
    doc = json.loads(plan_path.read_text())
    assert doc["cost"] == pytest.approx(d, abs=1e-15)


def test_check_b1_undecided_exit_code(tmp_path, capsys):
    model_path = tmp_path / "k.json"
    run(["gallery", "kesten", "--out", str(model_path)])
    code = run(["check", "--model", str(model_path), "--condition", "b1",
                "--max-word-len", "6", "--out", str(tmp_path / "v.json")])
    assert code == 2
    verdict = json.loads((tmp_path / "v.json").read_text())
    assert verdict["kind"] == "undecided"


def test_check_condition_a_on_identity_lumping(tmp_path):
    P = fm.TransitionMatrix.from_dense(np.full((3, 3), 1.0 / 3.0))
    model = fm.FilterModel(
        fm.partition_from_lumping(P, [0, 1, 2]),
        meta={"partition_spec": {"lumping": [0, 1, 2]}},
    )
    model_path = tmp_path / "id.json"
    fm.save_model(model, model_path)
    out = tmp_path / "v.json"
    assert run(["check", "--model", str(model_path), "--condition", "a",
                "--out", str(out)]) == 0
    verdict = json.loads(out.read_text())
    assert verdict["kind"] == "condition_a"
    assert len(verdict["word"]) == 1
    # localizing with the tight default bound ceil(3/4) = 1
    assert run(["check", "--model", str(model_path), "--condition", "localizing",
                "--out", str(out)]) == 0
    verdict = json.loads(out.read_text())
    assert verdict["kind"] == "localizing"


def test_check_thm93_exit_codes(tmp_path):
    P = fm.TransitionMatrix.from_dense(np.full((3, 3), 1.0 / 3.0))
    model = fm.FilterModel(
        fm.partition_from_lumping(P, [0, 1, 2]),
        meta={"partition_spec": {"lumping": [0, 1, 2]}},
    )
    id_path = tmp_path / "id.json"
    fm.save_model(model, id_path)
    assert run(["check", "--model", str(id_path), "--condition", "thm93",
                "--out", str(tmp_path / "v1.json")]) == 0
    k_path = tmp_path / "k.json"
    run(["gallery", "kesten", "--out", str(k_path)])
    assert run(["check", "--model", str(k_path), "--condition", "thm93",
                "--out", str(tmp_path / "v2.json")]) == 2


def test_evolve_subcommand(tmp_path, capsys):
    model_path = tmp_path / "k.json"
    run(["gallery", "kesten", "--out", str(model_path)])
    out = tmp_path / "mu.json"
    assert run(["evolve", "--model", str(model_path), "--steps", "10",
                "--out", str(out)]) == 0
    mu = fm.load_measure(out)
    assert mu.size <= 8
    assert abs(float(mu.weights.sum()) - 1.0) <= 1e-9


def test_gallery_perm_family_default(tmp_path):
    out = tmp_path / "pf.json"
    assert run(["gallery", "perm-family", "--out", str(out)]) == 0
    model = fm.load_model(out)
    kest = fm.kesten_model()
    assert np.array_equal(model.partition.base.toarray(), kest.partition.base.toarray())


def test_gallery_birkhoff_params(tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"matrix": [[0.7, 0.3], [0.3, 0.7]]}))
    out = tmp_path / "b.json"
    assert run(["gallery", "birkhoff", "--params", str(params), "--out", str(out)]) == 0
    model = fm.load_model(out)
    assert model.partition.num_labels == 2


def test_error_exit_codes(tmp_path, capsys):
    # missing file -> validation error
    assert run(["simulate", "--model", str(tmp_path / "nope.json"),
                "--steps", "3", "--out", str(tmp_path / "t.csv")]) == 1
    # malformed JSON -> validation error
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["simulate", "--model", str(bad), "--steps", "3",
                "--out", str(tmp_path / "t.csv")]) == 1
    # unknown flag -> validation error, not a crash
    assert run(["simulate", "--bogus"]) == 1
    # invariant violation inside the model file
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({
        "states": 2,
        "P": [[0, 0, 0.9], [0, 1, 0.5], [1, 0, 0.5], [1, 1, 0.5]],
        "partition": {"lumping": [0, 1]},
    }))
    assert run(["evolve", "--model", str(broken), "--steps", "1",
                "--out", str(tmp_path / "m.json")]) == 1


def test_threads_flag_accepted(tmp_path, monkeypatch):
    model_path = tmp_path / "k.json"
    assert run(["--threads", "4", "gallery", "kesten", "--out", str(model_path)]) == 0
    assert run(["--threads", "0", "gallery", "kesten", "--out", str(model_path)]) == 1
    monkeypatch.setenv("FILTERMC_THREADS", "2")
    assert run(["gallery", "kesten", "--out", str(model_path)]) == 0


def test_gallery_random_walk_explicit_params(tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({
        "n": 4,
        "a": [0.5, 0.5, 0.5],
        "b": [0.25, 0.25, 0.25, 0.25],
        "c": [0.75, 0.25, 0.25, 0.25],
    }))
    out = tmp_path / "rw.json"
    assert run(["gallery", "random-walk", "--params", str(params), "--out", str(out)]) == 0
    model = fm.load_model(out)
    P = model.partition.base.toarray()
    assert P[3, 3] == pytest.approx(0.5)  # reflection: 0.25 + 0.25
    assert model.partition.labels == (1, 2)
