"""Stochastic column-exchange search over Latin hypercubes.

A move swaps two entries within one column, which keeps every column a
permutation. Simulated annealing and threshold accepting share the same loop;
criteria that support it are updated incrementally instead of being
re-evaluated from scratch.
"""

import csv
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .criteria import MAXIMIZE, CriterionSpec, Kind, evaluate, to_levels
from .design import LatinHypercube, random_latin_hypercube
from .errors import DegenerateDesignError, InternalConsistencyError, InvalidArgumentError
from .rng import derive_seed, make_rng

SIMULATED_ANNEALING = "simulated-annealing"
THRESHOLD_ACCEPTING = "threshold-accepting"


@dataclass(frozen=True)
class AnnealSchedule:
    """Search schedule. ``None`` fields are filled in from the starting design.

    For simulated annealing ``initial_temperature`` defaults to the value at
    which the median worsening probe move is accepted with probability 1/2.
    For threshold accepting it is the initial threshold and defaults to a tenth
    of the starting criterion value.
    """

    initial_temperature: float = None
    cooling_factor: float = 0.95
    moves_per_temperature: int = None
    max_total_moves: int = 5000
    mode: str = SIMULATED_ANNEALING
    threshold_decay: float = 0.9
    probe_moves: int = 100

    def __post_init__(self):
        if self.mode not in (SIMULATED_ANNEALING, THRESHOLD_ACCEPTING):
            raise InvalidArgumentError(f"unknown search mode {self.mode!r}")
        if self.initial_temperature is not None and not self.initial_temperature > 0:
            raise InvalidArgumentError("initial temperature must be positive")
        if not 0 < self.cooling_factor < 1:
            raise InvalidArgumentError("cooling factor must lie in (0, 1)")
        if not 0 < self.threshold_decay < 1:
            raise InvalidArgumentError("threshold decay must lie in (0, 1)")
        if self.moves_per_temperature is not None and self.moves_per_temperature < 1:
            raise InvalidArgumentError("moves per temperature must be positive")
        if self.max_total_moves < 0:
            raise InvalidArgumentError("max_total_moves must be non-negative")

    def to_dict(self):
        return {
            "initial_temperature": self.initial_temperature,
            "cooling_factor": self.cooling_factor,
            "moves_per_temperature": self.moves_per_temperature,
            "max_total_moves": self.max_total_moves,
            "mode": self.mode,
            "threshold_decay": self.threshold_decay,
        }


@dataclass
class SearchResult:
    best_design: LatinHypercube
    best_value: float
    trace: list
    moves_evaluated: int
    seed: int
    spec: CriterionSpec = None
    schedule: AnnealSchedule = None
    restart_values: tuple = field(default_factory=tuple)

    def to_dict(self, include_trace=False):
        out = {
            "criterion": self.spec.to_dict() if self.spec else None,
            "best_value": self.best_value,
            "moves_evaluated": self.moves_evaluated,
            "seed": self.seed,
            "schedule": self.schedule.to_dict() if self.schedule else None,
            "restart_values": list(self.restart_values),
            "levels": self.best_design.levels.tolist(),
            "jitter": self.best_design.jitter.tolist(),
        }
        if include_trace:
            out["trace"] = [list(t) for t in self.trace]
        return out

    def to_json(self, include_trace=False):
        return json.dumps(self.to_dict(include_trace))

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["move", "value", "accepted"])
            for move, value, accepted in self.trace:
                w.writerow([move, repr(value), int(accepted)])


def exchange_move(lh, column, i, j):
    """Swap rows ``i`` and ``j`` of ``column`` (levels and their jitter)."""
    if i == j:
        raise InvalidArgumentError("exchange needs two distinct rows")
    if not (0 <= column < lh.d and 0 <= i < lh.n and 0 <= j < lh.n):
        raise InvalidArgumentError("move indices out of range")
    levels = lh.levels.copy()
    jitter = lh.jitter.copy()
    levels[[i, j], column] = levels[[j, i], column]
    jitter[[i, j], column] = jitter[[j, i], column]
    return LatinHypercube(levels, jitter)


# -- evaluators ---------------------------------------------------------------


class Evaluator:
    """Tracks a design and the criterion value under column swaps.

    ``propose`` returns the value the design would have after the swap,
    ``accept`` commits the last proposal. The generic implementation
    re-evaluates the full criterion.
    """

    resync_every = 0

    def __init__(self, X, spec):
        self.X = np.array(X, dtype=float)
        self.spec = spec
        self.n, self.d = self.X.shape
        self._pending = None
        self.value = self._full()

    def _full(self):
        return evaluate(self.X, self.spec)

    def _swap(self, c, i, j):
        self.X[i, c], self.X[j, c] = self.X[j, c], self.X[i, c]

    def propose(self, c, i, j):
        self._swap(c, i, j)
        try:
            value = evaluate(self.X, self.spec)
        except DegenerateDesignError:
            value = math.inf
        finally:
            self._swap(c, i, j)
        self._pending = (c, i, j, value)
        return value

    def accept(self):
        c, i, j, value = self._pending
        self._swap(c, i, j)
        self.value = value
        self._pending = None

    def resync(self):
        self.value = self._full()

    def check(self, rtol=1e-9):
        full = evaluate(self.X, self.spec)
        if not math.isclose(full, self.value, rel_tol=rtol, abs_tol=1e-300):
            raise InternalConsistencyError(f"cached value {self.value!r} != full evaluation {full!r}")


class _PairEvaluator(Evaluator):
    """Shared machinery for criteria built from a symmetric pair matrix whose
    rows i and j are recomputed exactly on each move."""

    def __init__(self, X, spec):
        self.X = np.array(X, dtype=float)
        self.spec = spec
        self.n, self.d = self.X.shape
        self._ri = np.empty(self.n)
        self._rj = np.empty(self.n)
        self._pending = None
        self.M = self._matrix()
        self.value = self._reduce(-1, -1)

    def propose(self, c, i, j):
        self._rows(c, i, j)
        value = self._reduce(i, j)
        self._pending = (c, i, j, value)
        return value

    def accept(self):
        c, i, j, value = self._pending
        K.write_rows(self.M, i, j, self._ri, self._rj)
        self._swap(c, i, j)
        self.value = value
        self._pending = None

    def resync(self):
        self.M = self._matrix()
        self.value = self._reduce(-1, -1)


class PhiPEvaluator(_PairEvaluator):
    def __init__(self, X, spec):
        self.q = float(spec.q)
        self.p = float(spec.resolved_p(np.shape(X)[0]))
        super().__init__(X, spec)

    def _matrix(self):
        P = K.pair_power_matrix(self.X, self.q)
        with np.errstate(divide="ignore"):
            return np.log(P)

    def _rows(self, c, i, j):
        K.swapped_power_rows(self.X, c, i, j, self.q, self._ri, self._rj)
        with np.errstate(divide="ignore"):
            np.log(self._ri, out=self._ri)
            np.log(self._rj, out=self._rj)

    def _reduce(self, i, j):
        lse = K.logsumexp_pairs(self.M, -self.p / self.q, i, j, self._ri, self._rj)
        return math.exp(lse / self.p) if lse < math.inf else math.inf


class MinDistanceEvaluator(_PairEvaluator):
    def _matrix(self):
        return K.pair_power_matrix(self.X, float(self.spec.q))

    def _rows(self, c, i, j):
        K.swapped_power_rows(self.X, c, i, j, float(self.spec.q), self._ri, self._rj)

    def _reduce(self, i, j):
        return K.min_pairs(self.M, i, j, self._ri, self._rj) ** (1.0 / self.spec.q)


class MaxProEvaluator(_PairEvaluator):
    def _matrix(self):
        return K.log_gap_matrix(self.X)

    def _rows(self, c, i, j):
        K.swapped_log_gap_rows(self.X, c, i, j, self._ri, self._rj)

    def _reduce(self, i, j):
        lse = K.logsumexp_pairs(self.M, -1.0, i, j, self._ri, self._rj)
        if lse == math.inf:
            return math.inf
        return math.exp((lse - math.log(self.n * (self.n - 1) / 2.0)) / self.d)


class ARDEvaluator(Evaluator):
    """Running pair sum; only projections containing the swapped column change."""

    resync_every = 2000

    def __init__(self, X, spec):
        self.X = np.array(X, dtype=float)
        self.spec = spec
        self.n, self.d = self.X.shape
        J = [k for k in spec.J if 1 <= k <= self.d]
        if len(J) != len(spec.J):
            raise InvalidArgumentError(f"projection orders {spec.J} exceed d = {self.d}")
        subsets = [U for k in J for U in itertools.combinations(range(self.d), k)]
        kmax = max(len(U) for U in subsets)
        self.subsets = np.zeros((len(subsets), kmax), dtype=np.int64)
        self.sizes = np.array([len(U) for U in subsets], dtype=np.int64)
        for u, U in enumerate(subsets):
            self.subsets[u, : len(U)] = U
        by_col = [[u for u, U in enumerate(subsets) if c in U] for c in range(self.d)]
        self.col_ptr = np.cumsum([0] + [len(b) for b in by_col]).astype(np.int64)
        self.col_idx = np.array([u for b in by_col for u in b], dtype=np.int64)
        self.lam = float(spec.lam)
        self.norm = len(subsets) * self.n * (self.n - 1) / 2.0
        self._pending = None
        self.resync()

    def _value(self, total):
        if not math.isfinite(total):
            return math.inf
        return (total / self.norm) ** (1.0 / self.lam)

    def resync(self):
        self.G = K.squared_gap_tensor(self.X)
        self.total = K.ard_total(self.G, self.subsets, self.sizes, self.lam)
        self.value = self._value(self.total)

    def propose(self, c, i, j):
        delta = K.ard_swap_delta(self.G, self.X, c, i, j, self.subsets, self.sizes,
                                 self.col_ptr, self.col_idx, self.lam)
        value = self._value(self.total + delta)
        self._pending = (c, i, j, delta, value)
        return value

    def accept(self):
        c, i, j, delta, value = self._pending
        self._swap(c, i, j)
        K.swap_rows_cols(self.G[c], i, j)
        self.total += delta
        self.value = value
        self._pending = None


class UPEvaluator(Evaluator):
    """Running sum of projected CDs; a swap in column c touches the d - 1
    projections containing c."""

    resync_every = 2000

    def __init__(self, X, spec):
        self.X = np.array(X, dtype=float)
        self.spec = spec
        self.n, self.d = self.X.shape
        if self.d < 2:
            raise InvalidArgumentError("uniform projection criterion needs d >= 2")
        self.s = self.n if spec.s_levels is None else int(spec.s_levels)
        self._pending = None
        self.resync()

    def resync(self):
        L = to_levels(self.X, self.s)
        Z = (2.0 * L - self.s + 1.0) / (2.0 * self.s)
        self.F, self.g = K.cd_factor_tensor(Z)
        self.total = K.up_pair_total(self.F, self.g)
        self.value = self._value(self.total)

    def _value(self, total):
        return 2.0 * total / (self.d * (self.d - 1)) + (13.0 / 12.0) ** 2

    def propose(self, c, i, j):
        delta = K.up_swap_delta(self.F, self.g, c, i, j)
        value = self._value(self.total + delta)
        self._pending = (c, i, j, delta, value)
        return value

    def accept(self):
        c, i, j, delta, value = self._pending
        self._swap(c, i, j)
        K.swap_rows_cols(self.F[c], i, j)
        self.g[c, i], self.g[c, j] = self.g[c, j], self.g[c, i]
        self.total += delta
        self.value = value
        self._pending = None


_EVALUATORS = {
    Kind.PHI_P: PhiPEvaluator,
    Kind.MIN_DISTANCE: MinDistanceEvaluator,
    Kind.MAXPRO: MaxProEvaluator,
    Kind.ARD: ARDEvaluator,
    Kind.UP: UPEvaluator,
}


def make_evaluator(X, spec):
    """Evaluator for ``spec`` on design ``X`` (incremental where supported)."""
    cls = _EVALUATORS.get(spec.kind, Evaluator)
    ev = cls(X, spec)
    if not math.isfinite(ev.value):
        raise DegenerateDesignError(f"{spec.kind.value} is not finite on the starting design")
    return ev


class SearchState:
    """A Latin hypercube paired with its evaluator cache."""

    def __init__(self, lh, spec):
        self.levels = lh.levels.copy()
        self.jitter = lh.jitter.copy()
        self.spec = spec
        self.evaluator = make_evaluator((self.levels - self.jitter) / lh.n, spec)

    @property
    def value(self):
        return self.evaluator.value

    def design(self):
        return LatinHypercube(self.levels, self.jitter)

    def apply(self, c, i, j):
        self.levels[[i, j], c] = self.levels[[j, i], c]
        self.jitter[[i, j], c] = self.jitter[[j, i], c]
        self.evaluator.accept()


def incremental_value(lh, spec, state, move):
    """Criterion value of ``lh`` after ``move = (column, i, j)``, from the cache.

    Raises :class:`InternalConsistencyError` when ``state`` does not describe
    ``lh``.
    """
    if (not np.array_equal(state.levels, lh.levels) or not np.array_equal(state.jitter, lh.jitter)
            or state.spec != spec):
        raise InternalConsistencyError("search state is stale for this Latin hypercube")
    c, i, j = move
    if i == j:
        raise InvalidArgumentError("exchange needs two distinct rows")
    return state.evaluator.propose(c, i, j)


# -- search -------------------------------------------------------------------


class _MoveStream:
    def __init__(self, rng, n, d, batch=4096):
        self.rng, self.n, self.d, self.batch = rng, n, d, batch
        self._fill()

    def _fill(self):
        rng, n, b = self.rng, self.n, self.batch
        self.c = rng.integers(0, self.d, b).tolist()
        i = rng.integers(0, n, b)
        j = rng.integers(0, n - 1, b)
        j = j + (j >= i)
        self.i, self.j = i.tolist(), j.tolist()
        self.u = rng.random(b).tolist()
        self.k = 0

    def next(self):
        if self.k == self.batch:
            self._fill()
        k = self.k
        self.k += 1
        return self.c[k], self.i[k], self.j[k], self.u[k]


def _resolve_schedule(schedule, state, stream, n):
    sign = -1.0 if state.spec.direction == MAXIMIZE else 1.0
    if schedule.moves_per_temperature is None:
        schedule = replace(schedule, moves_per_temperature=10 * n)
    if schedule.initial_temperature is None:
        if schedule.mode == THRESHOLD_ACCEPTING:
            t0 = 0.1 * abs(state.value)
        else:
            worse = []
            for _ in range(schedule.probe_moves):
                c, i, j, _ = stream.next()
                delta = sign * (state.evaluator.propose(c, i, j) - state.value)
                if delta > 0 and math.isfinite(delta):
                    worse.append(delta)
            t0 = float(np.median(worse)) / math.log(2.0) if worse else 0.0
        if not t0 > 0:
            t0 = 1e-12 * max(abs(state.value), 1e-300)
        schedule = replace(schedule, initial_temperature=t0)
    return schedule


def accept_move(delta, level, u, annealing=True):
    """Acceptance rule for a move that changes the (minimised) value by ``delta``.

    Improvements and ties are always taken. A worsening move is taken with
    probability ``exp(-delta / level)`` (``u`` is a uniform draw) when
    annealing, or when ``delta < level`` under threshold accepting.
    """
    if delta <= 0:
        return True
    if annealing:
        return u < math.exp(-delta / level)
    return delta < level


def anneal(initial, spec, schedule=None, seed=0, check_every=1000):
    """Improve ``initial`` under ``spec`` by exchange moves.

    Parameters
    ----------
    initial : LatinHypercube
    spec : CriterionSpec
    schedule : AnnealSchedule, optional
        Defaults to ``AnnealSchedule()``; unset knobs are calibrated on the
        starting design.
    seed : int
    check_every : int
        Verify the Latin hypercube structure every this many accepted moves
        (1 checks every accepted state, 0 disables the check).

    Returns
    -------
    SearchResult
        ``trace`` holds ``(move, current value, accepted)`` for the start
        (move 0) and every proposal.
    """
    schedule = AnnealSchedule() if schedule is None else schedule
    n, d = initial.n, initial.d
    state = SearchState(initial, spec)
    trace = [(0, state.value, True)]
    best_lh, best_value = initial, state.value
    if schedule.max_total_moves == 0 or n < 2:
        return SearchResult(best_lh, best_value, trace, 0, seed, spec, schedule)

    sign = -1.0 if spec.direction == MAXIMIZE else 1.0
    stream = _MoveStream(make_rng(seed), n, d)
    schedule = _resolve_schedule(schedule, state, stream, n)
    ev = state.evaluator
    level = schedule.initial_temperature
    annealing = schedule.mode == SIMULATED_ANNEALING
    decay = schedule.cooling_factor if annealing else schedule.threshold_decay
    accepted_count = 0
    current = state.value
    for move in range(1, schedule.max_total_moves + 1):
        c, i, j, u = stream.next()
        value = ev.propose(c, i, j)
        delta = sign * (value - current)
        accept = accept_move(delta, level, u, annealing)
        if accept and math.isfinite(value):
            state.apply(c, i, j)
            current = value
            accepted_count += 1
            if ev.resync_every and accepted_count % ev.resync_every == 0:
                ev.resync()
                current = ev.value
            if check_every and accepted_count % check_every == 0:
                _check_structure(state)
            if sign * current < sign * best_value:
                best_value = current
                best_lh = state.design()
        else:
            accept = False
        trace.append((move, current, accept))
        if move % schedule.moves_per_temperature == 0:
            level *= decay
    return SearchResult(best_lh, best_value, trace, schedule.max_total_moves, seed, spec, schedule)


def _check_structure(state):
    n = state.levels.shape[0]
    if not np.all(np.sort(state.levels, axis=0) == np.arange(1, n + 1)[:, None]):
        raise InternalConsistencyError("search left the Latin hypercube class")


def restart_seeds(seed, r):
    """Seeds ``(initial design, search)`` used by restart ``r`` of :func:`multi_restart`."""
    return derive_seed(seed, r, 0), derive_seed(seed, r, 1)


def multi_restart(n, d, spec, restarts=10, schedule=None, seed=0, midpoint=True, threads=1):
    """Best of ``restarts`` independent searches from fresh random Latin hypercubes.

    Restart ``r`` starts from ``random_latin_hypercube(n, d, restart_seeds(seed, r)[0])``
    and anneals with seed ``restart_seeds(seed, r)[1]``. Results are merged
    by restart index, so the outcome does not depend on ``threads``.
    """
    if restarts < 1:
        raise InvalidArgumentError("restarts must be >= 1")

    def one(r):
        init_seed, search_seed = restart_seeds(seed, r)
        lh = random_latin_hypercube(n, d, init_seed, midpoint=midpoint)
        return anneal(lh, spec, schedule, search_seed)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(restarts)))
    else:
        results = [one(r) for r in range(restarts)]
    sign = -1.0 if spec.direction == MAXIMIZE else 1.0
    best = min(range(restarts), key=lambda r: (sign * results[r].best_value, r))
    out = results[best]
    out.restart_values = tuple(r.best_value for r in results)
    out.seed = seed
    return out
