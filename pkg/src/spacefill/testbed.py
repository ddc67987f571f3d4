"""Test-function simulators and the replicate benchmark runner."""

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import CriterionSpec
from .design import check_design, halton_sequence, random_latin_hypercube, realize
from .errors import ConfigurationError, InvalidArgumentError, NotFoundError
from .gp import MATERN32, FitConfig, fit, predict_mean
from .oa import oa_based_lhd, parse_oa, verify_strength
from .optimize import AnnealSchedule, multi_restart
from .rng import derive_seed

# -- simulators ----------------------------------------------------------------


def detpep10(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        terms = [np.exp(-2.0 / x[..., k] ** e) for k, e in enumerate((1.75, 1.5, 1.25))]
    return 100.0 * sum(terms)


def friedman(x):
    x = np.asarray(x, dtype=float)
    return (10.0 * np.sin(np.pi * x[..., 0] * x[..., 1]) + 20.0 * (x[..., 2] - 0.5) ** 2
            + 10.0 * x[..., 3] + 5.0 * x[..., 4])


def gramacy_lee(x):
    x = np.asarray(x, dtype=float)
    return np.exp(np.sin((0.9 * (x[..., 0] + 0.48)) ** 10)) + x[..., 1] * x[..., 2] + x[..., 3]


def bratley(x):
    x = np.asarray(x, dtype=float)
    prods = np.cumprod(x, axis=-1)
    signs = (-1.0) ** np.arange(1, x.shape[-1] + 1)
    return prods @ signs


def robot_arm(x):
    """Distance of the arm tip from the shoulder.

    Inputs 1-4 are angles scaled to ``[0, 2 pi]``, inputs 5-8 segment lengths.
    """
    x = np.asarray(x, dtype=float)
    angles = np.cumsum(2.0 * np.pi * x[..., :4], axis=-1)
    lengths = x[..., 4:8]
    u = np.sum(lengths * np.cos(angles), axis=-1)
    v = np.sum(lengths * np.sin(angles), axis=-1)
    return np.sqrt(u**2 + v**2)


@dataclass(frozen=True)
class Simulator:
    name: str
    dimension: int
    function: object = field(repr=False)

    def __call__(self, x):
        return eval_simulator(self.name, x)


SIMULATORS = {
    s.name: s
    for s in (
        Simulator("detpep10", 3, detpep10),
        Simulator("friedman", 5, friedman),
        Simulator("gramacylee", 6, gramacy_lee),
        Simulator("bratley", 9, bratley),
        Simulator("robotarm", 8, robot_arm),
    )
}


def get_simulator(name):
    try:
        return SIMULATORS[name.lower()]
    except KeyError:
        raise NotFoundError(f"unknown simulator {name!r}; known: {sorted(SIMULATORS)}") from None


def eval_simulator(name, x):
    """Evaluate a simulator at one point (returns float) or at rows of a matrix."""
    sim = get_simulator(name)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != sim.dimension or x.ndim > 2:
        raise InvalidArgumentError(f"{sim.name} expects points of dimension {sim.dimension}")
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise InvalidArgumentError("simulator inputs must lie in the unit cube")
    out = sim.function(x)
    return float(out) if x.ndim == 1 else np.asarray(out, dtype=float)


def rmspe(model, simulator, test_set):
    """Root mean squared prediction error of ``model`` against ``simulator`` on ``test_set``.

    ``simulator`` may be a registered name or any callable mapping an
    ``(N, d)`` array to ``N`` outputs.
    """
    W = np.atleast_2d(np.asarray(test_set, dtype=float))
    if W.shape[0] == 0:
        raise InvalidArgumentError("test set is empty")
    truth = eval_simulator(simulator, W) if isinstance(simulator, str) else np.asarray(simulator(W), dtype=float)
    pred = predict_mean(model, W)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


# -- design methods ----------------------------------------------------------


@dataclass(frozen=True)
class MethodOptions:
    restarts: int = 5
    max_total_moves: int = 5000
    mode: str = "simulated-annealing"
    oa_files: tuple = ()


def _optimized(kind, **params):
    def make(n, d, seed, opts):
        spec = CriterionSpec(kind, **params)
        schedule = AnnealSchedule(max_total_moves=opts.max_total_moves, mode=opts.mode)
        return realize(multi_restart(n, d, spec, opts.restarts, schedule, seed).best_design)
    return make


def _random_lhd(n, d, seed, opts):
    return realize(random_latin_hypercube(n, d, seed))


def _halton(n, d, seed, opts):
    return halton_sequence(n, d)


def _oa_lhd(n, d, seed, opts):
    gaps = []
    for path in opts.oa_files:
        oa = parse_oa(Path(path).read_text())
        if oa.n != n or oa.d < d:
            gaps.append(f"{path}: OA({oa.n}, {oa.s}^{oa.d}, {oa.t})")
            continue
        sub = oa.columns(range(d))
        if not verify_strength(sub, sub.t):
            raise ConfigurationError(f"{path} is not an orthogonal array of strength {sub.t}")
        return realize(oa_based_lhd(sub, seed))
    raise ConfigurationError(
        f"oa-lhd needs an orthogonal array with {n} runs and at least {d} factors; "
        f"available: {gaps or 'no array files'}")


METHODS = {
    "random-lhd": _random_lhd,
    "maximin-lhd": _optimized("phi_p", q=2, p=50),
    "phi_p-lhd": _optimized("phi_p", q=2),
    "maxpro-lhd": _optimized("maxpro"),
    "up-lhd": _optimized("up"),
    "ard-lhd": _optimized("ard", J=(1, 2), lam=1.0),
    "oa-lhd": _oa_lhd,
    "halton": _halton,
}


def generate_design(method, n, d, seed, options=None):
    try:
        make = METHODS[method]
    except KeyError:
        raise NotFoundError(f"unknown design method {method!r}; known: {sorted(METHODS)}") from None
    return check_design(make(n, d, seed, options or MethodOptions()))


# -- benchmark -----------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    simulator: str
    methods: tuple
    run_sizes: tuple
    replicates: int = 50
    test_set_size: int = 5000
    seed: int = 0
    gp: FitConfig = field(default_factory=FitConfig)
    kernel: str = MATERN32
    design: MethodOptions = field(default_factory=MethodOptions)
    threads: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidArgumentError("replicates must be >= 1")
        if self.test_set_size < 1:
            raise InvalidArgumentError("test set size must be >= 1")
        get_simulator(self.simulator)
        for m in self.methods:
            if m not in METHODS:
                raise NotFoundError(f"unknown design method {m!r}; known: {sorted(METHODS)}")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "run_sizes", tuple(int(n) for n in self.run_sizes))

    def to_dict(self):
        return {
            "simulator": self.simulator,
            "methods": list(self.methods),
            "run_sizes": list(self.run_sizes),
            "replicates": self.replicates,
            "test_set_size": self.test_set_size,
            "seed": self.seed,
            "kernel": self.kernel,
            "gp": self.gp.to_dict(),
            "design": {**asdict(self.design), "oa_files": list(self.design.oa_files)},
        }


@dataclass(frozen=True)
class BenchmarkRow:
    method: str
    n: int
    replicate: int
    rmspe: float
    log_rmspe: float
    design_time_s: float
    fit_time_s: float
    seed: int


TIMING_FIELDS = ("design_time_s", "fit_time_s")


def aggregate(rows):
    """Mean and standard deviation of log RMSPE (and mean RMSPE, times) per ``(method, n)``."""
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.n), []).append(r)
    out = []
    for (method, n), rs in groups.items():
        logs = np.array([r.log_rmspe for r in rs])
        out.append({
            "method": method,
            "n": n,
            "replicates": len(rs),
            "mean_log_rmspe": float(logs.mean()),
            "sd_log_rmspe": float(logs.std(ddof=1)) if len(rs) > 1 else 0.0,
            "mean_rmspe": float(np.mean([r.rmspe for r in rs])),
            "mean_design_time_s": float(np.mean([r.design_time_s for r in rs])),
            "total_design_time_s": float(np.sum([r.design_time_s for r in rs])),
            "mean_fit_time_s": float(np.mean([r.fit_time_s for r in rs])),
        })
    return out


@dataclass
class BenchmarkReport:
    config: BenchmarkConfig
    rows: list
    dimension: int
    metadata: dict = field(default_factory=dict)

    @property
    def aggregates(self):
        return aggregate(self.rows)

    def aggregate_for(self, method, n):
        for a in self.aggregates:
            if a["method"] == method and a["n"] == n:
                return a
        raise NotFoundError(f"no rows for method {method!r} at n={n}")

    def to_dict(self, timings=True):
        rows = [asdict(r) for r in self.rows]
        aggs = self.aggregates
        if not timings:
            for r in rows:
                for k in TIMING_FIELDS:
                    r.pop(k)
            aggs = [{k: v for k, v in a.items() if "time" not in k} for a in aggs]
        return {"metadata": self.metadata, "config": self.config.to_dict(), "dimension": self.dimension,
                "rows": rows, "aggregates": aggs}

    def to_json(self, timings=True):
        return json.dumps(self.to_dict(timings), indent=2)

    def write_json(self, path, timings=True):
        Path(path).write_text(self.to_json(timings))

    def write_time_table(self, path, value="mean_design_time_s"):
        """CSV with one row per ``n``: ``n, d`` and one column per method."""
        aggs = {(a["method"], a["n"]): a for a in self.aggregates}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "d", *self.config.methods])
            for n in self.config.run_sizes:
                w.writerow([n, self.dimension, *[repr(aggs[(m, n)][value]) for m in self.config.methods]])


def _replicate(config, dim, method, n, rep):
    seed = derive_seed(config.seed, config.run_sizes.index(n), config.methods.index(method), rep)
    design_seed, test_seed, fit_seed = (derive_seed(seed, k) for k in range(3))
    t0 = time.perf_counter()
    X = generate_design(method, n, dim, design_seed, config.design)
    t1 = time.perf_counter()
    y = eval_simulator(config.simulator, X)
    gp_config = FitConfig(**{**config.gp.__dict__, "seed": fit_seed})
    t2 = time.perf_counter()
    model = fit(X, y, config.kernel, gp_config)
    t3 = time.perf_counter()
    W = realize(random_latin_hypercube(config.test_set_size, dim, test_seed))
    err = rmspe(model, config.simulator, W)
    return BenchmarkRow(method, n, rep, err, math.log(err) if err > 0 else -math.inf,
                        t1 - t0, t3 - t2, seed)


def run_benchmark(config):
    """Run every ``(method, n, replicate)`` cell and collect a report.

    Each replicate draws its design, fit and test-set seeds from
    ``derive_seed(config.seed, n index, method index, replicate)``; the test set is
    a fresh random Latin hypercube of ``config.test_set_size`` points.
    """
    dim = get_simulator(config.simulator).dimension
    if "oa-lhd" in config.methods:
        for n in config.run_sizes:
            _oa_lhd(n, dim, 0, config.design)  # fail fast on a missing array
    jobs = [(m, n, r) for n in config.run_sizes for m in config.methods for r in range(config.replicates)]
    if config.threads and config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(lambda job: _replicate(config, dim, *job), jobs))
    else:
        rows = [_replicate(config, dim, *job) for job in jobs]
    meta = {"tool_version": __version__, "output_scaling": "none",
            "eta_mode": "fixed" if config.gp.fixed_eta is not None else "estimated",
            "log_base": "e", "test_set": "random Latin hypercube"}
    return BenchmarkReport(config, rows, dim, meta)
