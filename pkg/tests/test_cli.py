import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from patchgrowth import get_entry, modelfile
from patchgrowth.cli import main, parse_grid


@pytest.fixture
def fig3(tmp_path):
    path = tmp_path / "fig3.json"
    assert main(["export", "three-patch-fig3", "-o", str(path)]) == 0
    return path


@pytest.fixture
def fig1(tmp_path):
    path = tmp_path / "fig1.json"
    assert main(["export", "three-patch-fig1", "--param", "b=-0.8", "-o", str(path)]) == 0
    return path


def test_parse_grid():
    assert parse_grid("3,1,2,1", positive=True, name="m").tolist() == [1, 2, 3]
    assert np.allclose(parse_grid("log:0.01:100:5", positive=True, name="m"), [0.01, 0.1, 1, 10, 100])


def test_export_round_trip(fig3):
    assert modelfile.load(fig3) == get_entry("three-patch-fig3").build()


def test_eval_json(fig3, capsys):
    assert main(["eval", str(fig3), "--m", "1", "--T", "1", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lambda"] == pytest.approx(-0.31716, abs=1e-4)
    assert out["sigma"] == -1 and out["chi"] == 1
    assert math.log(out["mu"]) == pytest.approx(out["lambda"])


def test_eval_decoupled(fig3, capsys):
    assert main(["eval", str(fig3), "--m", "0", "--T", "5"]) == 0
    out = capsys.readouterr().out
    assert "decoupled" in out and "-0.333333333" in out


def test_eval_equal_growth(tmp_path, capsys):
    path = tmp_path / "eq.json"
    main(["export", "three-patch-fig3", "--param", "a=0.25", "--param", "b=0.25", "-o", str(path)])
    assert main(["eval", str(path), "--m", "2", "--T", "3", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["lambda"] == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize(
    "doc, code",
    [
        ('{"n": 2, "breakpoints": ["0"], "segments": [{"r": [1, 0], "L": [[-1, 0], [1, 0]]}]}', 3),
        ('{"n": 2, "breakpoints": ["0"], "segments": [{"r": [1, 0], "L": [[-1, 0], [2, 0]]}]}', 2),
        ("not json", 2),
    ],
)
def test_eval_exit_codes(tmp_path, capsys, doc, code):
    path = tmp_path / "m.json"
    path.write_text(doc)
    assert main(["eval", str(path), "--m", "1", "--T", "1"]) == code
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_eval_bad_parameters(fig3):
    assert main(["eval", str(fig3), "--m", "-1", "--T", "1"]) == 2
    assert main(["eval", str(fig3), "--m", "1", "--T", "0"]) == 2


def test_check_exit_code_and_config(fig3, capsys):
    assert main(["check", str(fig3), "--m", "1", "--perturbations", "4", "--json"]) == 4
    out = json.loads(capsys.readouterr().out)
    assert [r["verdict"] for r in out["reports"]] == ["verified-sampled", "verified-sampled", "violated"]
    assert out["config"]["perturbations"] == 4


def test_check_all_verified(tmp_path):
    path = tmp_path / "eps.json"
    main(["export", "two-patch-epsilon", "-o", str(path)])
    assert main(["check", str(path), "--m", "1"]) == 0


def test_limits_table(fig3, capsys):
    assert main(["limits", str(fig3), "--m", "1"]) == 0
    out = capsys.readouterr().out
    assert "0.4142135623" in out and "absent (H4 violated)" in out and "config:" in out
    assert main(["limits", str(fig3), "--m", "1", "--force", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["flags"]["lambda_infT"]["note"] == "formula value, hypothesis unverified"


def test_sweep_deterministic(fig1, tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    args = ["sweep", str(fig1), "--m", "0,0.5,10", "--T", "log:0.1:10:3"]
    assert main([*args, "-o", str(a)]) == 0
    assert main([*args, "-o", str(b), "--jobs", "1"]) == 0
    monkeypatch.setenv("PATCHGROWTH_JOBS", "2")
    assert main([*args, "-o", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = list(csv.reader(a.read_text().splitlines()))
    assert rows[0] == ["m", "T", "lambda", "mu", "decoupled"]
    assert [(float(r[0]), float(r[1])) for r in rows[1:4]] == pytest.approx([(0, 0.1), (0, 1), (0, 10)])
    assert rows[1][4] == "true" and rows[4][4] == "false"


def test_sweep_bad_grid(fig1):
    assert main(["sweep", str(fig1), "--m", "log:1:0:3", "--T", "1"]) == 2
    assert main(["sweep", str(fig1), "--m", "1", "--T", "0"]) == 2


def test_dig(fig1, capsys):
    assert main(["dig", str(fig1), "--perturbations", "2", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] == "found-numerically" and out["witness"][2] > 0


def test_did_emits_model(tmp_path, capsys):
    src = tmp_path / "growth.json"
    src.write_text(json.dumps({"n": 2, "breakpoints": ["0", "1/2"],
                               "segments": [{"r": [2, -1]}, {"r": [-1, 2]}]}))
    out = tmp_path / "built.json"
    assert main(["did", str(src), "--emit", str(out), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] == "theory-certain" and doc["limit"] == pytest.approx(-1.0)
    built = modelfile.load(out)
    assert np.array_equal(built.migration.segments[0].matrix, [[-1, 0], [1, 0]])


def test_trajectory_csv(fig3, tmp_path):
    path = tmp_path / "traj.csv"
    assert main(["trajectory", str(fig3), "--m", "1", "--T", "2", "--x0", "1,0,0",
                 "--periods", "4", "-o", str(path)]) == 0
    rows = list(csv.reader(path.read_text().splitlines()))
    assert rows[0] == ["t", "x1", "x2", "x3", "log_norm"]
    assert [float(r[0]) for r in rows[1:]] == [0, 2, 4, 6, 8]
    x = np.array([[float(v) for v in r[1:4]] for r in rows[1:]])
    assert np.allclose(np.log(x.sum(axis=1)), [float(r[4]) for r in rows[1:]])


def test_trajectory_bad_x0(fig3):
    assert main(["trajectory", str(fig3), "--m", "1", "--T", "1", "--x0", "1,0"]) == 2


def test_catalog_listing(capsys):
    assert main(["catalog", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 11


def test_export_unknown(capsys):
    assert main(["export", "missing"]) == 2


def test_module_entry_point(fig3):
    proc = subprocess.run([sys.executable, "-m", "patchgrowth", "eval", str(fig3), "--m", "1", "--T", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("Lambda = ")
