import csv
import json

import pytest

from lpsc.cli import BAD_INPUT, OK, VIOLATION, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


@pytest.fixture
def problem(tmp_path):
    g = tmp_path / "g.json"
    assert main(["graph", "build", "regular", "--params", "3,6,12", "--seed", "1", "--out", str(g)]) == OK
    e = tmp_path / "e.json"
    e.write_text(json.dumps([0] * 11 + [1]))
    return tmp_path, g, e


def test_decode_and_witness_pipeline(problem, capsys):
    d, g, e = problem
    code, out = run(capsys, "decode", "--code", g, "--error", e, "--emit-witness-point")
    res = json.loads(out)
    assert code == OK and len(res["point"]) == 12
    w = d / "w.json"
    code, _ = run(capsys, "witness", "find", "--code", g, "--error", e, "--out", w)
    if not res["success"]:
        assert code == VIOLATION
        return
    assert code == OK
    code, out = run(capsys, "witness", "verify", "--code", g, "--error", e, "--witness", w)
    assert code == OK and json.loads(out)["ok"]
    h = d / "h.json"
    code, _ = run(capsys, "witness", "transform", "--code", g, "--error", e, "--witness", w, "--out", h)
    assert code == OK
    code, out = run(capsys, "witness", "hyperflow", "--code", g, "--error", e, "--witness", h)
    assert code == OK
    rows = d / "rows.csv"
    code, out = run(capsys, "bounds", "check", "--code", g, "--error", e, "--witness", h, "--csv", rows)
    assert code == OK and json.loads(out)["ok"]
    assert list(csv.DictReader(open(rows)))[0].keys() == {"n", "alpha_max", "bound", "ratio"}
    code, out = run(capsys, "forest", "expand", "--code", g, "--error", e, "--witness", h)
    assert code == OK and json.loads(out)["ok"]


def test_failed_verification_exit_code(problem, capsys):
    d, g, e = problem
    w = d / "w.json"
    w.write_text(json.dumps({"edges": [], "margin": None}))
    bad = d / "bad.json"
    bad.write_text(" ".join(["1"] * 12))
    code, out = run(capsys, "witness", "verify", "--code", g, "--error", bad, "--witness", w)
    assert code == VIOLATION and not json.loads(out)["ok"]


def test_bad_input(problem, capsys):
    d, g, _ = problem
    short = d / "short.json"
    short.write_text("[0, 1]")
    assert main(["decode", "--code", str(g), "--error", str(short)]) == BAD_INPUT
    assert main(["graph", "build", "regular", "--params", "3,6,7"]) == BAD_INPUT


def test_unified(capsys):
    code, out = run(capsys, "bounds", "unified", "--lam", 1, "--beta", 10, "--dc", 6, "--m", 111)
    r = json.loads(out)
    assert code == OK and r["T_prime"] == [1, 10, 100, 0] and r["f_value"] == "7/1"


def test_tight(tmp_path, capsys):
    t = tmp_path / "t.json"
    assert main(["tight", "build", "--dv", "3", "--dc", "4", "--yn", "1", "--out", str(t)]) == OK
    assert "BBlock" in t.read_text()
    code, out = run(capsys, "tight", "hyperflow", "--instance", t, "--eps", "1/4")
    assert code == OK and json.loads(out)["max_weight"] == "21/4"
    assert main(["tight", "hyperflow", "--instance", str(t), "--eps", "1/2"]) == BAD_INPUT
    code, out = run(capsys, "tight", "certify", "--instance", t)
    assert code == OK and json.loads(out)["min_max_weight"] == "18/5"


def test_graph_derive_and_reduce(tmp_path, capsys):
    c, dd = tmp_path / "c.json", tmp_path / "d.json"
    assert main(["graph", "build", "gc", "--params", "3,2,2,2", "--seed", "3", "--out", str(c)]) == OK
    assert main(["graph", "derive", "--cover", str(c), "--cut", "0", "--out", str(dd)]) == OK
    code, out = run(capsys, "graph", "validate", dd)
    assert code == OK and json.loads(out)["ok"]


def test_sim_commands(tmp_path, capsys):
    out_csv = tmp_path / "r.csv"
    code, out = run(capsys, "sim", "rate", "--params", "3,6,12", "--eps", 0.05, "--trials", 5, "--out", out_csv)
    assert code == OK and json.loads(out)["trials"] == 5
    assert len(list(csv.DictReader(open(out_csv)))) == 5
    code, out = run(capsys, "sim", "mono", "--params", "3,2,2,2", "--eps", 0.05, "--trials", 5)
    assert code == OK and json.loads(out)["violations"] == []
    code, out = run(capsys, "sim", "roundtrip", "--params", "3,2,2,2", "--eps", 0.05, "--trials", 5)
    assert code == OK and json.loads(out)["ok"]
    code, out = run(capsys, "sim", "threshold", "--params", "3,6,12", "--trials", 10, "--tol", 0.1, "--no-certify")
    assert code == OK and json.loads(out)["label"] == "finite-n estimate"
