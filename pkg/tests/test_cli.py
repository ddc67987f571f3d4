import json
import subprocess
import sys

import numpy as np
import pytest

from spacefill import __version__
from spacefill.cli import run
from spacefill.criteria import CriterionSpec, Kind, evaluate
from spacefill.design import validate_latin_hypercube
from spacefill.io import read_design_csv, read_metadata

from conftest import OA9_TEXT


def last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)


def test_generate_and_evaluate(tmp_path, capsys):
    out = tmp_path / "design.csv"
    assert run(["generate", "--n", "10", "--d", "4", "--seed", "7", "--out", str(out)]) == 0
    X = read_design_csv(out)
    assert X.shape == (10, 4) and validate_latin_hypercube(X)
    meta = read_metadata(out)
    assert meta["seed"] == 7 and meta["tool_version"] == __version__
    assert "generate --n 10" in meta["command"]
    capsys.readouterr()
    argv = ["evaluate", "--criterion", "phi_p", "--q", "2", "--p", "50", "--in", str(out)]
    assert run(argv) == 0
    first = capsys.readouterr().out.strip()
    assert run(argv) == 0
    assert capsys.readouterr().out.strip() == first
    assert np.isfinite(float(first))


@pytest.mark.parametrize("kind", ["phi_p", "maxpro", "ard", "up", "min_distance", "centered_l2", "avg_abs_correlation"])
def test_round_trip_preserves_criterion(tmp_path, capsys, kind):
    out = tmp_path / "d.csv"
    run(["generate", "--n", "12", "--d", "3", "--seed", "3", "--out", str(out)])
    capsys.readouterr()
    assert run(["evaluate", "--criterion", kind, "--in", str(out), "--format", "json"]) == 0
    reported = json.loads(capsys.readouterr().out)["value"]
    from spacefill.design import random_latin_hypercube, realize
    direct = evaluate(realize(random_latin_hypercube(12, 3, 3)), CriterionSpec(Kind(kind)))
    assert reported == pytest.approx(direct, rel=1e-9)


def test_generate_variants(capsys):
    assert run(["generate", "--n", "4", "--d", "2", "--kind", "halton", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["data"][0] == [0.5, pytest.approx(1 / 3)]
    assert run(["generate", "--n", "5", "--d", "2", "--levels"]) == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")]
    assert lines[0] == "l1,l2"
    assert sorted(int(ln.split(",")[0]) for ln in lines[1:]) == [1, 2, 3, 4, 5]


def test_bounds(capsys):
    assert run(["bounds", "--n", "16"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["n"] == 16 and data["k_lower_bound"] == 12 and data["metadata"]["seed"] == 0


def test_optimize(tmp_path, capsys):
    out, trace = tmp_path / "o.csv", tmp_path / "t.csv"
    argv = ["optimize", "--n", "8", "--d", "3", "--criterion", "maxpro", "--restarts", "2", "--moves", "300",
            "--seed", "11", "--threads", "2", "--out", str(out), "--trace", str(trace)]
    assert run(argv) == 0
    X = read_design_csv(out)
    meta = read_metadata(out)
    assert validate_latin_hypercube(X)
    assert meta["best_value"] == pytest.approx(evaluate(X, CriterionSpec(Kind.MAXPRO)), rel=1e-9)
    assert meta["seed"] == 11 and len(meta["restart_values"]) == 2
    assert trace.read_text().startswith("move,value,accepted")
    assert run(argv[:-4] + ["--threads", "1", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["best_value"] == meta["best_value"]


def test_oa_commands(tmp_path, capsys):
    oa = tmp_path / "oa.txt"
    oa.write_text(OA9_TEXT)
    assert run(["verify-oa", "--oa", str(oa)]) == 0
    assert json.loads(capsys.readouterr().out)["verified"] is True
    assert run(["verify-oa", "--oa", str(oa), "--t", "3"]) == 1
    capsys.readouterr()
    out = tmp_path / "lhd.csv"
    assert run(["oa-lhd", "--oa", str(oa), "--seed", "2", "--out", str(out)]) == 0
    X = read_design_csv(out)
    assert X.shape == (9, 4) and validate_latin_hypercube(X)
    bad = tmp_path / "bad.txt"
    bad.write_text(OA9_TEXT.replace("2 2 3 1", "2 2 4 1"))
    assert run(["oa-lhd", "--oa", str(bad)]) == 1
    err = last_error(capsys)
    assert err["error"] == "parse-error" and "line 6" in err["message"]


def test_gp_fit_and_predict(tmp_path, capsys):
    design, model, pts = tmp_path / "d.csv", tmp_path / "m.json", tmp_path / "p.csv"
    run(["generate", "--n", "20", "--d", "5", "--seed", "1", "--out", str(design)])
    assert run(["gp-fit", "--in", str(design), "--simulator", "friedman", "--nugget", "0", "--out", str(model)]) == 0
    data = json.loads(model.read_text())
    assert data["model"]["eta"] == 0.0 and data["metadata"]["seed"] == 0
    assert run(["predict", "--model", str(model), "--in", str(design), "--format", "json"]) == 0
    capsys.readouterr()
    assert run(["predict", "--model", str(model), "--in", str(design), "--out", str(pts)]) == 0
    pred = np.array([float(v) for v in pts.read_text().split()[1:]])
    from spacefill.testbed import eval_simulator
    np.testing.assert_allclose(pred, eval_simulator("friedman", read_design_csv(design)), atol=1e-6)
    y = tmp_path / "y.csv"
    y.write_text("y\n" + "\n".join(str(v) for v in pred) + "\n")
    assert run(["gp-fit", "--in", str(design), "--y", str(y)]) == 0


def test_benchmark_command(tmp_path, capsys):
    report, times = tmp_path / "r.json", tmp_path / "t.csv"
    argv = ["benchmark", "--simulator", "detpep10", "--methods", "random-lhd,up-lhd", "--n", "10",
            "--replicates", "2", "--test-size", "50", "--restarts", "1", "--moves", "100",
            "--no-timings", "--out", str(report), "--times", str(times), "--seed", "3"]
    assert run(argv) == 0
    data = json.loads(report.read_text())
    assert len(data["rows"]) == 4 and data["metadata"]["seed"] == 3
    first = report.read_text()
    assert run(argv) == 0
    assert report.read_text() == first
    assert times.read_text().startswith("n,d,random-lhd,up-lhd")


def test_exit_codes(tmp_path, capsys):
    assert run(["bounds", "--n", "2"]) == 1
    assert last_error(capsys)["error"] == "invalid-argument"
    assert run(["frobnicate"]) == 2
    assert run(["generate", "--n", "3"]) == 2
    assert run(["generate", "--n", "x", "--d", "2"]) == 2
    assert run(["evaluate", "--criterion", "phi_p", "--in", str(tmp_path / "missing.csv")]) == 1
    assert last_error(capsys)["error"] == "io-error"
    dup = tmp_path / "dup.csv"
    dup.write_text("x1,x2\n0.1,0.2\n0.1,0.5\n0.3,0.9\n")
    assert run(["evaluate", "--criterion", "maxpro", "--in", str(dup)]) == 1
    assert last_error(capsys)["error"] == "degenerate-design"
    assert run(["gp-fit", "--in", str(dup), "--simulator", "friedman"]) == 1
    assert last_error(capsys)["error"] == "invalid-argument"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spacefill", "bounds", "--n", "6"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["k_lower_bound"] == 1
