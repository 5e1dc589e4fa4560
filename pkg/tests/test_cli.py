import json
import subprocess
import sys

import pytest

from crround.cli import main
from crround.report import RunReport
from crround.scheme import balancedness_c


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json", "--no-meta")
    return code, json.loads(out)


def test_table_single_cell(capsys):
    code, doc = run_json(capsys, "table", "--n", "2", "--k", "1")
    assert code == 0
    assert doc["command"] == "table"
    assert doc["results"] == [{"n": 2, "1": 0.75}]
    assert "wall_time_ms" not in doc


def test_table_blank_when_k_reaches_n(capsys):
    code, doc = run_json(capsys, "table", "--n", "2,5", "--k", "3")
    assert doc["results"][0]["3"] is None
    assert doc["results"][1]["3"] == pytest.approx(balancedness_c(3, 5))


def test_table_limit_row_and_csv(capsys):
    code, out, _ = run(capsys, "table", "--n", "10", "--k", "1,2", "--limit-row", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "n,1,2"
    assert lines[2].startswith("limit,0.632")


def test_pretty_output(capsys):
    code, out, _ = run(capsys, "table", "--n", "4", "--k", "2,3", "--format", "pretty")
    assert code == 0
    assert "0.8125" in out


def test_json_round_trip(capsys):
    _, out, _ = run(capsys, "table", "--format", "json")
    report = RunReport.from_json(out)
    assert report.wall_time_ms is not None
    assert json.loads(report.to_json()) == json.loads(out)


def test_byte_identical_without_meta(capsys):
    args = ["estimate", "--n", "5", "--k", "2", "--trials", "2000", "--seed", "9", "--format", "json", "--no-meta"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_seed_precedence(capsys, monkeypatch):
    monkeypatch.setenv("CRROUND_SEED", "17")
    _, doc = run_json(capsys, "table", "--n", "2", "--k", "1")
    assert doc["seed"] == 17
    _, doc = run_json(capsys, "table", "--n", "2", "--k", "1", "--seed", "3")
    assert doc["seed"] == 3
    monkeypatch.delenv("CRROUND_SEED")
    _, doc = run_json(capsys, "table", "--n", "2", "--k", "1")
    assert doc["seed"] == 0


def test_format_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("CRROUND_FORMAT", "csv")
    code, out, _ = run(capsys, "table", "--n", "2", "--k", "1")
    assert out.splitlines()[0] == "n,1"
    monkeypatch.setenv("CRROUND_FORMAT", "yaml")
    code, _, err = run(capsys, "table")
    assert code == 2 and "CRROUND_FORMAT" in err


def test_usage_errors_exit_2(capsys, tmp_path):
    assert run(capsys, "verify", "nonsense")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "estimate", "--n", "3")[0] == 2
    assert run(capsys, "round", str(tmp_path / "missing.json"), "--k", "1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 3, "x": [0.9, 0.9, 0.9], "k": 1}))
    code, _, err = run(capsys, "round", str(bad))
    assert code == 2 and "polytope" in err


def test_round_echoes_small_sets(capsys, tmp_path):
    doc = tmp_path / "in.json"
    doc.write_text(json.dumps({"n": 4, "x": [0.5] * 4, "A": [1, 3], "k": 2}))
    code, rep = run_json(capsys, "round", str(doc), "--trials", "5")
    trials = [r for r in rep["results"] if r["kind"] == "trial"]
    assert all(r["selected"] == [1, 3] for r in trials)
    assert code == 0


def test_round_full_set_gives_k_subsets(capsys, tmp_path):
    doc = tmp_path / "in.json"
    doc.write_text(json.dumps({"n": 4, "x": [0.5] * 4, "A": [0, 1, 2, 3]}))
    code, rep = run_json(capsys, "round", str(doc), "--k", "2", "--trials", "1")
    assert len(rep["results"][0]["selected"]) == 2


def test_round_frequencies_match_marginals(capsys, tmp_path):
    doc = tmp_path / "in.json"
    doc.write_text(json.dumps({"n": 5, "x": [0.4] * 5, "A": [0, 1, 2, 3, 4], "k": 2}))
    code, rep = run_json(capsys, "round", str(doc), "--trials", "100000", "--summary-only")
    assert code == 0 and rep["pass"] is True
    assert all(r["kind"] == "frequency" for r in rep["results"])


def test_round_csv_input_and_partition(capsys, tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("0.5,0.5\n0.3,0.3,0.3\n")
    code, rep = run_json(capsys, "round", str(path), "--partition", "2:1,3:1", "--trials", "200", "--seed", "1")
    assert code == 0
    for r in rep["results"]:
        if r["kind"] == "trial":
            sel = set(r["selected"])
            assert len(sel & {0, 1}) <= 1 and len(sel & {2, 3, 4}) <= 1


def test_round_partition_in_json(capsys, tmp_path):
    doc = tmp_path / "in.json"
    doc.write_text(json.dumps({"n": 3, "x": [0.5, 0.5, 1.0],
                               "partition": [{"block": [0, 1], "cap": 1}, {"block": [2], "cap": 1}]}))
    code, rep = run_json(capsys, "round", str(doc), "--trials", "50")
    assert code == 0
    assert rep["parameters"]["matroid"]["type"] == "partition"


def test_estimate_symmetric(capsys):
    code, rep = run_json(capsys, "estimate", "--n", "10", "--k", "9", "--trials", "100000", "--z", "4")
    assert code == 0
    assert all(r["flagged"] is False for r in rep["results"])
    mean = sum(r["conditional_keep"] for r in rep["results"]) / 10
    assert mean == pytest.approx(0.961, abs=3e-3)


def test_estimate_partition_and_explicit_point(capsys):
    code, rep = run_json(capsys, "estimate", "--partition", "2:1,3:1", "--trials", "100000", "--z", "4")
    assert code == 0
    assert rep["parameters"]["balancedness"] == pytest.approx(balancedness_c(1, 3))
    low = min(r["conditional_keep"] for r in rep["results"])
    assert low == pytest.approx(0.704, abs=0.01)
    code, rep = run_json(capsys, "estimate", "--n", "4", "--k", "2", "--x", "0.5,0,0.7,0", "--trials", "1000")
    assert code == 0 and all(r["conditional_keep"] == 1.0 for r in rep["results"])
    code, rep = run_json(capsys, "estimate", "--n", "4", "--k", "2", "--x", "random:3", "--trials", "2000")
    assert code == 0 and {r["point"] for r in rep["results"]} == {0, 1, 2}


def test_verify_exit_codes(capsys):
    code, rep = run_json(capsys, "verify", "thm2.5", "--n", "4", "--k", "2", "--resolution", "12")
    assert code == 0 and rep["pass"] is True
    grid = [r for r in rep["results"] if "grid_max" in r][0]
    assert grid["grid_max"] == pytest.approx(1 - balancedness_c(2, 4), abs=1e-9)
    # an impossible tolerance makes the same suite fail with exit code 1
    code, rep = run_json(capsys, "verify", "lemma2.3", "--instances", "20", "--tol-exact", "-1")
    assert code == 1 and rep["pass"] is False


def test_verify_named_suites(capsys):
    code, rep = run_json(capsys, "verify", "hessian", "--n", "6", "--k", "2")
    assert code == 0
    eig = rep["results"][0]["eigenvalues"]
    assert eig == pytest.approx([1, 1, 1, 1, 6])
    code, rep = run_json(capsys, "verify", "lemma2.7", "--k", "0", "--instances", "50")
    assert code == 0
    for suite in ["lemma2.2", "alpha-monotone", "lemma2.6-equality", "thm2.9"]:
        assert run_json(capsys, "verify", suite, "--instances", "30")[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "crround", "table", "--n", "3", "--k", "1", "--format", "json"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["1"] == pytest.approx(19 / 27)
