"""Design matrices, Latin hypercubes and the Halton baseline.

A *design* is an ``(n, d)`` float array with entries in ``[0, 1)``. A Latin
hypercube is stored as its integer level matrix (each column a permutation of
``1..n``) together with the within-cell offsets that map it to a design.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedDimensionError
from .rng import make_rng


def check_design(X, *, unit_cube=True):
    """Coerce ``X`` to a 2-D float array, validating shape and range."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise InvalidArgumentError(f"design must be a non-empty n x d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("design contains non-finite entries")
    if unit_cube and (X.min() < 0.0 or X.max() >= 1.0):
        raise InvalidArgumentError("design entries must lie in [0, 1)")
    return X


@dataclass(frozen=True, eq=False)
class LatinHypercube:
    """Level matrix plus jitter; ``realize`` maps it to a design.

    Attributes
    ----------
    levels : ndarray of int, shape (n, d)
        Each column is a permutation of ``1..n``.
    jitter : ndarray of float, shape (n, d)
        Offsets ``u_ij`` in ``[0, 1)``; all ``0.5`` for a midpoint (lattice) design.
    """

    levels: np.ndarray
    jitter: np.ndarray

    def __post_init__(self):
        levels = np.array(self.levels, dtype=np.int64, ndmin=2)
        jitter = np.broadcast_to(np.asarray(self.jitter, dtype=float), levels.shape).copy()
        n, d = levels.shape
        if n < 1 or d < 1:
            raise InvalidArgumentError("Latin hypercube must have n >= 1 and d >= 1")
        expected = np.arange(1, n + 1)
        if not np.all(np.sort(levels, axis=0) == expected[:, None]):
            raise InvalidArgumentError("every column of levels must be a permutation of 1..n")
        if jitter.min() < 0.0 or jitter.max() >= 1.0:
            raise InvalidArgumentError("jitter entries must lie in [0, 1)")
        levels.flags.writeable = False
        jitter.flags.writeable = False
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "jitter", jitter)

    @property
    def n(self):
        return self.levels.shape[0]

    @property
    def d(self):
        return self.levels.shape[1]

    @property
    def is_midpoint(self):
        return bool(np.all(self.jitter == 0.5))

    def realize(self):
        return realize(self)

    def __eq__(self, other):
        if not isinstance(other, LatinHypercube):
            return NotImplemented
        return np.array_equal(self.levels, other.levels) and np.array_equal(self.jitter, other.jitter)

    __hash__ = None


def random_latin_hypercube(n, d, seed=0, midpoint=False):
    """Draw a random Latin hypercube.

    Each column is an independent uniform permutation of ``1..n`` (Fisher-Yates
    via ``Generator.permutation``); jitter is i.i.d. uniform on ``[0, 1)``
    unless ``midpoint`` is set, in which case it is ``1/2`` everywhere.
    """
    n, d = int(n), int(d)
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"n and d must be positive, got n={n}, d={d}")
    rng = make_rng(seed)
    levels = np.empty((n, d), dtype=np.int64)
    base = np.arange(1, n + 1, dtype=np.int64)
    for j in range(d):
        levels[:, j] = rng.permutation(base)
    if midpoint:
        jitter = np.full((n, d), 0.5)
    else:
        jitter = rng.random((n, d))
    return LatinHypercube(levels, jitter)


def realize(lh):
    """Map a Latin hypercube to a design: ``x_ij = (l_ij - u_ij) / n``."""
    return (lh.levels - lh.jitter) / lh.n


def validate_latin_hypercube(X, n_levels=None):
    """True iff every column puts exactly one point in each of ``n_levels`` bins."""
    X = check_design(X)
    n = X.shape[0]
    if n_levels is None:
        n_levels = n
    if int(n_levels) != n:
        raise InvalidArgumentError(f"n_levels ({n_levels}) must equal the number of runs ({n})")
    bins = np.floor(n * X).astype(np.int64)
    expected = np.arange(n)[:, None]
    return bool(np.all(np.sort(bins, axis=0) == expected))


def _first_primes(count):
    primes = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


PRIMES = tuple(_first_primes(64))


def radical_inverse(indices, base):
    """Van der Corput radical inverse of non-negative integers in ``base``."""
    k = np.array(indices, dtype=np.int64)
    out = np.zeros(k.shape, dtype=float)
    scale = 1.0 / base
    while np.any(k > 0):
        k, digit = np.divmod(k, base)
        out += digit * scale
        scale /= base
    return out


def halton_sequence(n, d, skip=0):
    """Unscrambled Halton points with indices ``skip+1 .. skip+n``.

    Coordinate ``j`` uses the ``j``-th prime as base; at most 64 dimensions.
    """
    n, d, skip = int(n), int(d), int(skip)
    if n < 1 or d < 1 or skip < 0:
        raise InvalidArgumentError("n and d must be positive and skip non-negative")
    if d > len(PRIMES):
        raise UnsupportedDimensionError(f"Halton generator supports d <= {len(PRIMES)}, got {d}")
    idx = np.arange(skip + 1, skip + n + 1)
    return np.column_stack([radical_inverse(idx, PRIMES[j]) for j in range(d)])
