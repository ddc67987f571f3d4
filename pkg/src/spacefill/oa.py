"""Orthogonal arrays, OA-based Latin hypercubes and orthogonal-LHD bounds."""

import itertools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .design import LatinHypercube, check_design
from .errors import InvalidArgumentError, ParseError, PreconditionError
from .rng import make_rng


@dataclass(frozen=True, eq=False)
class OrthogonalArray:
    """An ``n x d`` array over levels ``1..s`` with declared strength ``t``.

    The strength is only declared here; :func:`verify_strength` checks it.
    """

    rows: np.ndarray
    s: int
    t: int

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64, ndmin=2)
        s, t = int(self.s), int(self.t)
        if s < 1 or t < 1:
            raise InvalidArgumentError("s and t must be positive")
        if rows.min() < 1 or rows.max() > s:
            raise InvalidArgumentError(f"entries must lie in 1..{s}")
        if t > rows.shape[1]:
            raise InvalidArgumentError(f"strength {t} exceeds the number of factors {rows.shape[1]}")
        if rows.shape[0] % s**t:
            raise InvalidArgumentError(f"n = {rows.shape[0]} is not divisible by s^t = {s**t}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.rows.shape[1]

    @property
    def lambda_index(self):
        return self.n // self.s**self.t

    def columns(self, cols):
        return OrthogonalArray(self.rows[:, list(cols)], self.s, min(self.t, len(cols)))


def parse_oa(text):
    """Parse ``n d s t`` followed by ``n`` rows of ``d`` integers in ``1..s``.

    Blank lines and lines starting with ``#`` are ignored.
    """
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, tok) for i, tok in lines if tok and not tok[0].startswith("#")]
    if not lines:
        raise ParseError("empty orthogonal array file", line=1)
    lineno, header = lines[0]
    if len(header) != 4:
        raise ParseError(f"header must be 'n d s t', got {' '.join(header)!r}", line=lineno)
    try:
        n, d, s, t = (int(v) for v in header)
    except ValueError:
        raise ParseError(f"non-integer header {' '.join(header)!r}", line=lineno) from None
    if min(n, d, s, t) < 1:
        raise ParseError("header values must be positive", line=lineno)
    body = lines[1:]
    if len(body) != n:
        last = body[-1][0] if body else lineno
        raise ParseError(f"expected {n} rows, found {len(body)}", line=last)
    rows = np.empty((n, d), dtype=np.int64)
    for r, (lineno, tok) in enumerate(body):
        if len(tok) != d:
            raise ParseError(f"expected {d} entries, got {len(tok)}", line=lineno)
        for c, v in enumerate(tok):
            try:
                val = int(v)
            except ValueError:
                raise ParseError(f"non-integer entry {v!r}", line=lineno) from None
            if not 1 <= val <= s:
                raise ParseError(f"entry {val} outside 1..{s}", line=lineno)
            rows[r, c] = val
    if t > d:
        raise ParseError(f"strength {t} exceeds the number of factors {d}", line=lines[0][0])
    if n % s**t:
        raise ParseError(f"n = {n} is not divisible by s^t = {s**t}", line=lines[0][0])
    return OrthogonalArray(rows, s, t)


def format_oa(oa):
    lines = [f"{oa.n} {oa.d} {oa.s} {oa.t}"]
    lines += [" ".join(str(v) for v in row) for row in oa.rows]
    return "\n".join(lines) + "\n"


def verify_strength(oa, t=None):
    """True iff every ``t``-column projection contains each of the ``s^t``
    level combinations exactly ``n / s^t`` times."""
    t = oa.t if t is None else int(t)
    if not 1 <= t <= oa.d:
        raise InvalidArgumentError(f"strength must lie in 1..{oa.d}, got {t}")
    n, s = oa.n, oa.s
    if n % s**t:
        return False
    lam = n // s**t
    weights = s ** np.arange(t)
    for cols in itertools.combinations(range(oa.d), t):
        codes = (oa.rows[:, cols] - 1) @ weights
        counts = np.bincount(codes, minlength=s**t)
        if np.any(counts != lam):
            return False
    return True


def oa_based_lhd(oa, seed=0, midpoint=False):
    """Latin hypercube from an orthogonal array by within-level permutation.

    In each column the ``n/s`` positions holding level ``m`` receive a random
    permutation of ``(m-1)n/s + 1, ..., mn/s``.
    """
    if not verify_strength(oa, oa.t):
        raise PreconditionError(f"array is not an orthogonal array of strength {oa.t}")
    n, s = oa.n, oa.s
    block = n // s
    rng = make_rng(seed)
    levels = np.empty((n, oa.d), dtype=np.int64)
    for j in range(oa.d):
        for m in range(1, s + 1):
            pos = np.flatnonzero(oa.rows[:, j] == m)
            levels[pos, j] = rng.permutation(np.arange((m - 1) * block + 1, m * block + 1))
    jitter = np.full((n, oa.d), 0.5) if midpoint else rng.random((n, oa.d))
    return LatinHypercube(levels, jitter)


def bin_levels(X, s):
    """Level (``1..s``) of each entry under half-open bins ``[k/s, (k+1)/s)``."""
    X = check_design(X)
    return np.floor(X * s).astype(np.int64) + 1


def projection_cell_counts(X, columns, s):
    """Occupancy counts of the ``s^t`` cells of the projection onto ``columns``.

    Returns an integer array of shape ``(s,) * t``.
    """
    X = check_design(X)
    columns = list(columns)
    counts = np.zeros((s,) * len(columns), dtype=np.int64)
    idx = bin_levels(X[:, columns], s) - 1
    np.add.at(counts, tuple(idx.T), 1)
    return counts


# -- orthogonal Latin hypercube factor bounds --------------------------------

_LIN2008 = "Lin (2008), algorithmic construction"
_SMALL = {4: 2, 5: 2, 7: 3, 8: 4, 9: 5, 11: 7, 12: 6, 13: 6, 15: 6, 16: 12,
          17: 6, 19: 6, 20: 6, 21: 6, 23: 6, 24: 6}
_LIN2009 = "Lin, Mukerjee and Tang (2009)"
_LIN2010 = "Lin, Bingham, Sitter and Tang (2010)"
_SUN2009 = "Sun, Liu and Lin (2009)"
_SUN2017 = "Sun and Tang (2017)"
_STEIN2006 = "Steinberg and Lin (2006)"
_LARGE = {
    25: (12, _LIN2009), 27: (12, _SUN2017), 32: (24, _SUN2017), 33: (16, _SUN2009),
    48: (12, _LIN2010), 49: (24, _LIN2009), 64: (48, _SUN2017), 65: (32, _SUN2009),
    80: (12, _LIN2010), 81: (50, _LIN2009), 96: (24, _LIN2010), 97: (24, _LIN2010),
    112: (12, _LIN2010), 113: (12, _LIN2010), 121: (84, _LIN2009), 125: (58, _SUN2017),
    128: (96, _SUN2017), 129: (64, _SUN2009), 144: (24, _LIN2010), 145: (12, _LIN2010),
    160: (24, _LIN2010), 161: (24, _LIN2010), 169: (84, _LIN2009), 176: (12, _LIN2010),
    177: (12, _LIN2010), 192: (48, _LIN2010), 193: (48, _LIN2010), 208: (12, _LIN2010),
    209: (12, _LIN2010), 224: (24, _LIN2010), 225: (24, _LIN2010), 240: (12, _LIN2010),
    241: (12, _LIN2010), 243: (80, _SUN2017), 256: (248, _STEIN2006), 343: (168, _SUN2017),
    512: (496, _SUN2017),
}

BOUND_TABLE = {n: (k, _STEIN2006 if n == 16 else _LIN2008) for n, k in _SMALL.items()}
BOUND_TABLE.update(_LARGE)


@dataclass(frozen=True)
class BoundReport:
    """Best known lower bound on the number of orthogonal LHD factors.

    ``source`` is ``"tabulated"`` for published constructions and
    ``"rule-derived"`` when the bound comes from a general existence result.
    """

    n: int
    k_lower_bound: int
    source: str
    reference: str

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


def _rule_bound(n):
    if n == 3 or n % 4 == 2:
        return 1, "no orthogonal LHD with two or more factors exists for n = 3 or n = 4m + 2"
    m, j = divmod(n, 16)
    best, why = 2, "two or more factors exist for every n >= 4 with n != 4m + 2"
    rules = [
        (m >= 1 and j not in (2, 6, 10, 14), 6, "n = 16m + j, m >= 1"),
        (j == 11, 7, "n = 16m + 11"),
        (m >= 2 and j in (0, 1), 12, "n = 16m or 16m + 1, m >= 2"),
        (n // 32 >= 2 and n % 32 in (0, 1), 24, "n = 32m or 32m + 1, m >= 2"),
        (n // 64 >= 2 and n % 64 in (0, 1), 48, "n = 64m or 64m + 1, m >= 2"),
    ]
    for applies, k, label in rules:
        if applies and k > best:
            best, why = k, f"Lin, Bingham, Sitter and Tang (2010): {label}"
    return best, why


def olh_factor_bound(n):
    """Lower bound on the largest ``k`` for which an orthogonal LHD of ``n`` runs exists."""
    n = int(n)
    if n < 3:
        raise InvalidArgumentError(f"run size must be >= 3, got {n}")
    if n in BOUND_TABLE:
        k, ref = BOUND_TABLE[n]
        return BoundReport(n, k, "tabulated", ref)
    k, why = _rule_bound(n)
    return BoundReport(n, k, "rule-derived", why)
