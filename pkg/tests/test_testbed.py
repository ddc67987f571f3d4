import csv
import json
import math

import numpy as np
import pytest

from spacefill.design import random_latin_hypercube, realize, validate_latin_hypercube
from spacefill.errors import ConfigurationError, InvalidArgumentError, NotFoundError
from spacefill.gp import condition, fit, KernelSpec, predict_mean
from spacefill.testbed import (
    SIMULATORS, BenchmarkConfig, MethodOptions, aggregate, eval_simulator, generate_design, rmspe, run_benchmark,
)

from conftest import OA9_TEXT


def test_simulator_values():
    assert eval_simulator("friedman", [0.5] * 5) == pytest.approx(10 * math.sin(math.pi / 4) + 7.5)
    assert eval_simulator("bratley", [1.0] * 9) == pytest.approx(-1.0)
    assert eval_simulator("robotarm", [0, 0, 0, 0, 1, 1, 1, 1]) == pytest.approx(4.0)
    assert eval_simulator("detpep10", [1, 1, 1]) == pytest.approx(300 * math.exp(-2))
    assert eval_simulator("detpep10", [0, 0, 0]) == 0.0
    x = np.array([0.1, 0.9, 0.3, 0.5, 0.2, 0.7])
    assert eval_simulator("gramacylee", x) == pytest.approx(
        math.exp(math.sin((0.9 * 0.58) ** 10)) + 0.9 * 0.3 + 0.5)


def test_robot_arm_against_loop():
    x = np.random.default_rng(3).random(8)
    u = v = 0.0
    for i in range(4):
        angle = sum(2 * math.pi * x[j] for j in range(i + 1))
        u += x[4 + i] * math.cos(angle)
        v += x[4 + i] * math.sin(angle)
    assert eval_simulator("robotarm", x) == pytest.approx(math.hypot(u, v), rel=1e-14)


@pytest.mark.parametrize("name", sorted(SIMULATORS))
def test_simulators_deterministic_and_finite(name):
    d = SIMULATORS[name].dimension
    X = np.vstack([np.random.default_rng(0).random((50, d)), np.zeros(d), np.ones(d)])
    a, b = eval_simulator(name, X), eval_simulator(name, X)
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))
    assert a[3] == eval_simulator(name, X[3])


def test_simulator_errors():
    with pytest.raises(NotFoundError):
        eval_simulator("branin", [0.5, 0.5])
    with pytest.raises(InvalidArgumentError):
        eval_simulator("friedman", [0.5, 0.5, 0.5, 0.5, 1.2])
    with pytest.raises(InvalidArgumentError):
        eval_simulator("friedman", [0.5] * 4)


def test_rmspe_examples():
    X = realize(random_latin_hypercube(8, 2, 0))
    flat = fit(X, np.full(8, 3.0))
    W = realize(random_latin_hypercube(40, 2, 1))
    assert rmspe(flat, lambda Z: np.full(len(Z), 3.0), W) < 1e-8
    assert rmspe(flat, lambda Z: np.full(len(Z), 2.0), W) == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        rmspe(flat, "friedman", np.empty((0, 2)))


def test_rmspe_matches_loop():
    X = realize(random_latin_hypercube(10, 5, 2))
    model = condition(KernelSpec("matern32", [2.0] * 5), 1e-6, X, eval_simulator("friedman", X))
    W = realize(random_latin_hypercube(5, 5, 3))
    total = 0.0
    for w in W:
        total += (predict_mean(model, w) - eval_simulator("friedman", w)) ** 2
    assert rmspe(model, "friedman", W) == pytest.approx(math.sqrt(total / 5), rel=1e-12)
    assert rmspe(model, "friedman", W) >= 0


@pytest.mark.parametrize("method", ["random-lhd", "maximin-lhd", "maxpro-lhd", "up-lhd", "ard-lhd", "halton"])
def test_design_methods(method):
    X = generate_design(method, 9, 3, seed=1, options=MethodOptions(restarts=1, max_total_moves=200))
    assert X.shape == (9, 3)
    if method != "halton":
        assert validate_latin_hypercube(X)


def test_oa_method_needs_array(tmp_path):
    with pytest.raises(ConfigurationError, match="orthogonal array"):
        generate_design("oa-lhd", 9, 4, seed=0)
    path = tmp_path / "oa9.txt"
    path.write_text(OA9_TEXT)
    X = generate_design("oa-lhd", 9, 3, seed=0, options=MethodOptions(oa_files=(str(path),)))
    assert validate_latin_hypercube(X)
    with pytest.raises(ConfigurationError, match="oa9.txt"):
        generate_design("oa-lhd", 16, 3, seed=0, options=MethodOptions(oa_files=(str(path),)))
    with pytest.raises(NotFoundError):
        generate_design("lhsbeta", 9, 3, seed=0)


def small_config(**kw):
    base = dict(simulator="friedman", methods=("random-lhd", "up-lhd"), run_sizes=(12,), replicates=3,
                test_set_size=100, seed=4, design=MethodOptions(restarts=1, max_total_moves=200))
    base.update(kw)
    return BenchmarkConfig(**base)


def test_benchmark_smoke():
    report = run_benchmark(small_config(methods=("random-lhd",), run_sizes=(20,), replicates=1, test_set_size=200))
    assert len(report.rows) == 1
    assert math.isfinite(report.rows[0].rmspe)
    assert report.metadata["output_scaling"] == "none"
    assert report.metadata["eta_mode"] == "estimated"


def test_benchmark_is_reproducible():
    a = run_benchmark(small_config())
    b = run_benchmark(small_config(threads=3))
    assert a.to_json(timings=False) == b.to_json(timings=False)
    assert "design_time_s" not in a.to_json(timings=False)
    assert run_benchmark(small_config(seed=5)).to_json(timings=False) != a.to_json(timings=False)


def test_benchmark_aggregates_and_outputs(tmp_path):
    report = run_benchmark(small_config(run_sizes=(10, 14)))
    assert len(report.rows) == 2 * 2 * 3
    for r in report.rows:
        assert r.design_time_s >= 0 and r.fit_time_s >= 0
        assert r.log_rmspe == pytest.approx(math.log(r.rmspe), rel=1e-15)
    agg = report.aggregate_for("up-lhd", 14)
    logs = [r.log_rmspe for r in report.rows if r.method == "up-lhd" and r.n == 14]
    assert agg["mean_log_rmspe"] == pytest.approx(np.mean(logs), rel=1e-12)
    assert agg["sd_log_rmspe"] == pytest.approx(np.std(logs, ddof=1), rel=1e-12)
    assert aggregate(report.rows) == report.aggregates
    data = json.loads(report.to_json())
    assert data["config"]["replicates"] == 3 and len(data["rows"]) == 12
    path = tmp_path / "times.csv"
    report.write_time_table(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["n", "d", "random-lhd", "up-lhd"]
    assert [r[:2] for r in rows[1:]] == [["10", "5"], ["14", "5"]]


def test_benchmark_config_validation():
    with pytest.raises(InvalidArgumentError):
        small_config(replicates=0)
    with pytest.raises(InvalidArgumentError):
        small_config(test_set_size=0)
    with pytest.raises(NotFoundError):
        small_config(methods=("nope",))
    with pytest.raises(NotFoundError):
        small_config(simulator="nope")
    with pytest.raises(ConfigurationError):
        run_benchmark(small_config(methods=("oa-lhd",)))


def test_random_versus_maximin_within_factor_three():
    config = BenchmarkConfig("friedman", ("random-lhd", "maximin-lhd"), (100,), replicates=10, test_set_size=2000,
                             seed=1, design=MethodOptions(restarts=2, max_total_moves=3000))
    report = run_benchmark(config)
    means = [report.aggregate_for(m, 100)["mean_rmspe"] for m in config.methods]
    assert all(math.isfinite(m) for m in means)
    assert max(means) <= 3 * min(means)
