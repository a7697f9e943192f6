import json
import subprocess
import sys

import pytest

from apmetric.cli import DEFAULTS, SCHEMA, main, run


def report(argv):
    code, text = run(argv)
    return code, json.loads(text)


def test_periods_two_freq(capsys):
    code, rep = report(["periods", "--fn", "corpus:two_freq", "--metric", "sup", "--eps", "0.1"])
    assert code == 0
    assert rep["schema"] == SCHEMA
    assert rep["result"]["verdict"] == "relatively_dense"
    assert rep["boxes"]


def test_expectation_drives_exit_code(capsys):
    argv = ["periods", "--fn", "corpus:two_freq", "--metric", "sup", "--eps", "0.1"]
    assert report(argv + ["--expect", "positive"])[1]["expectation_met"] is True
    code, rep = report(argv + ["--expect", "negative"])
    assert code == 2 and rep["expectation_met"] is False


def test_luxemburg_norm_of_one(capsys):
    code, rep = report(["norm", "--metric", "lux:p=2,nu=1", "--fn", "1", "--box", "0,1"])
    assert code == 0
    assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-8)
    assert rep["config"]["metric"] == "lux:p=2,nu=1"


def test_verify_telescoping(capsys):
    code, rep = report(["verify", "telescoping"])
    assert code == 0 and rep["result"]["passed"]
    assert rep["result"]["checks"][0]["detail"]["max_residual"] <= 1e-12
    assert rep["citations"]


def test_unknown_suite_is_an_error(capsys):
    code, rep = report(["verify", "nosuch"])
    assert code == 1 and "unknown suite" in rep["error"]
    assert "unknown suite" in capsys.readouterr().err


def test_syntax_error_position(capsys):
    code, rep = report(["norm", "--fn", "sin(t", "--box", "0,1"])
    assert code == 1 and rep["offset"] == 5


def test_config_fills_gaps_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "lux:p=2,nu=1", "box": "0,2", "fn": "1"}))
    _, rep = report(["norm", "--config", str(cfg)])
    assert rep["result"]["value"] == pytest.approx(2 ** 0.5, abs=1e-8)
    _, rep = report(["norm", "--config", str(cfg), "--box", "0,1"])
    assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-8)
    assert rep["config"]["box"] == "0,1"


def test_seed_gives_identical_reports(capsys):
    argv = ["verify", "holder", "--seed", "3"]
    assert run(argv)[1] == run(argv)[1]


def test_csv_output(tmp_path, capsys):
    code, text = run(["spectrum", "--fn", "corpus:two_freq", "--format", "csv"])
    rows = text.strip().splitlines()
    assert code == 0 and rows[0].startswith("lambda")
    assert len(rows) == 5
    path = tmp_path / "s.csv"
    code, text = run(["spectrum", "--fn", "corpus:two_freq", "--csv", str(path)])
    assert json.loads(text)["command"] == "spectrum"
    assert path.read_text().count("\n") == 5


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["corpus", "show", "stojko1_sum", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["name"] == "stojko1_sum"
    assert capsys.readouterr().out == ""


def test_corpus_list(capsys):
    _, rep = report(["corpus", "list"])
    names = {e["name"] for e in rep["result"]["entries"]}
    assert {"two_freq", "stojko1_sum", "stojko2_sum", "levitan_unbounded"} <= names


def test_defaults_cover_every_flag():
    from apmetric.cli import build_parser

    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        for action in p._actions:
            if action.dest not in ("help", "config"):
                assert action.dest in DEFAULTS, (name, action.dest)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "apmetric", "mean", "--fn", "cos(t)", "--T", "50,100"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "mean"
