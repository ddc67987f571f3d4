"""Space-filling criteria as scalar functionals of a design.

Distance based (minimum distance, phi_p, fill distance), projection based
(ARD, MaxPro, uniform projection), discrepancy based (centered L2, star) and
correlation based criteria. :func:`evaluate` dispatches on a
:class:`CriterionSpec` so optimizers and the CLI treat them uniformly.
"""

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree
from scipy.spatial.distance import pdist
from scipy.special import logsumexp

from .errors import (
    DegenerateDesignError,
    InsufficientPointsError,
    InvalidArgumentError,
    UndefinedCorrelationError,
    UnsupportedDimensionError,
)
from .rng import make_rng


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidArgumentError(f"expected an n x d matrix, got shape {X.shape}")
    return X


def _need_pairs(X):
    if X.shape[0] < 2:
        raise InsufficientPointsError(f"criterion needs at least 2 points, got {X.shape[0]}")


def _check_q(q):
    q = int(q)
    if q < 1:
        raise InvalidArgumentError(f"distance order q must be >= 1, got {q}")
    return q


def default_p(n):
    """phi_p exponent by run size: 5 below 30 runs, 20 below 150, else 50."""
    if n < 30:
        return 5
    if n < 150:
        return 20
    return 50


# -- distance based ---------------------------------------------------------


def lq_distance(a, b, q=2):
    """``(sum_k |a_k - b_k|^q)^(1/q)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    q = _check_q(q)
    return float(np.sum(np.abs(a - b) ** q) ** (1.0 / q))


def pairwise_distances(X, q=2):
    """Condensed vector of L_q distances over pairs ``i < j``."""
    X = _as_matrix(X)
    q = _check_q(q)
    if q == 1:
        return pdist(X, "cityblock")
    if q == 2:
        return pdist(X, "euclidean")
    return pdist(X, "minkowski", p=q)


def min_interpoint_distance(X, q=2):
    """Separation distance: the smallest pairwise L_q distance."""
    X = _as_matrix(X)
    _need_pairs(X)
    return float(pairwise_distances(X, q).min())


def phi_p(X, q=2, p=None):
    """Morris-Mitchell criterion ``(sum_{i<j} d_q(x_i, x_j)^-p)^(1/p)``.

    Accumulated in log space, so large ``p`` with small gaps does not overflow.
    """
    X = _as_matrix(X)
    _need_pairs(X)
    p = default_p(X.shape[0]) if p is None else p
    if p < 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p}")
    dist = pairwise_distances(X, q)
    if np.any(dist <= 0.0):
        raise DegenerateDesignError("phi_p is infinite: design has coincident points")
    return float(np.exp(logsumexp(-p * np.log(dist)) / p))


@dataclass(frozen=True)
class DomainBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lower))
        hi = tuple(float(v) for v in np.ravel(self.upper))
        if len(lo) != len(hi) or not all(a < b for a, b in zip(lo, hi)):
            raise InvalidArgumentError("box bounds must satisfy lower < upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d):
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def d(self):
        return len(self.lower)


def _grid_axes(X, box):
    axes = []
    for k in range(X.shape[1]):
        vals = np.clip(X[:, k], box.lower[k], box.upper[k])
        vals = np.unique(np.concatenate([vals, [box.lower[k], box.upper[k]]]))
        mids = 0.5 * (vals[:-1] + vals[1:])
        axes.append(np.unique(np.concatenate([vals, mids])))
    return axes


def _max_nearest(tree, points, q):
    if len(points) == 0:
        return 0.0
    dist, _ = tree.query(points, p=q)
    return float(dist.max())


def _grid_fill(X, box, tree, q):
    axes = _grid_axes(X, box)
    if len(axes) == 1:
        return _max_nearest(tree, axes[0][:, None], q)
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, len(axes) - 1)
    best = 0.0
    for v in axes[0]:
        pts = np.column_stack([np.full(len(rest), v), rest])
        best = max(best, _max_nearest(tree, pts, q))
    return best


def _equidistant_points(X, box, m, fixed):
    """Points equidistant (L2) from ``m + 1`` design points with coordinates
    ``fixed`` pinned to box faces. Vertices of the box-clipped Voronoi diagram
    are all of this form."""
    n, d = X.shape
    free = [k for k in range(d) if k not in fixed]
    out = []
    subsets = np.array(list(itertools.combinations(range(n), m + 1)), dtype=np.int64)
    if len(subsets) == 0:
        return np.empty((0, d))
    for bounds in itertools.product(*[(box.lower[k], box.upper[k]) for k in fixed]):
        P0 = X[subsets[:, 0]]
        A = 2.0 * (X[subsets[:, 1:]] - P0[:, None, :])          # (S, m, d)
        rhs = np.sum(X[subsets[:, 1:]] ** 2, axis=2) - np.sum(P0**2, axis=1)[:, None]
        for k, b in zip(fixed, bounds):
            rhs = rhs - A[:, :, k] * b
        Af = A[:, :, free]
        det = np.linalg.det(Af)
        ok = np.abs(det) > 1e-12
        if not np.any(ok):
            continue
        sol = np.linalg.solve(Af[ok], rhs[ok][..., None])[..., 0]
        pts = np.empty((sol.shape[0], d))
        pts[:, free] = sol
        for k, b in zip(fixed, bounds):
            pts[:, k] = b
        out.append(pts)
    return np.concatenate(out) if out else np.empty((0, d))


def _vertex_fill(X, box, tree):
    n, d = X.shape
    lo, hi = np.array(box.lower), np.array(box.upper)
    cands = []
    # interior vertices: circumcentres of the Delaunay simplices
    if n >= d + 2:
        try:
            tri = Delaunay(X)
            for simplex in tri.simplices:
                P = X[simplex]
                A = 2.0 * (P[1:] - P[0])
                rhs = np.sum(P[1:] ** 2, axis=1) - np.sum(P[0] ** 2)
                if abs(np.linalg.det(A)) > 1e-14:
                    cands.append(np.linalg.solve(A, rhs)[None, :])
        except Exception:  # qhull rejects degenerate inputs
            cands.append(_equidistant_points(X, box, d, []))
    else:
        cands.append(_equidistant_points(X, box, min(d, n - 1), []) if n - 1 >= d else np.empty((0, d)))
    # boundary vertices: fewer equidistance equations, remaining coords on faces
    for m in range(1, d):
        if m + 1 > n:
            break
        for fixed in itertools.combinations(range(d), d - m):
            cands.append(_equidistant_points(X, box, m, list(fixed)))
    cands = np.concatenate([c for c in cands if len(c)]) if any(len(c) for c in cands) else np.empty((0, d))
    tol = 1e-12
    inside = np.all((cands >= lo - tol) & (cands <= hi + tol), axis=1)
    pts = np.clip(cands[inside], lo, hi)
    return _max_nearest(tree, pts, 2)


def fill_distance_estimate(X, box=None, method="exact-grid", budget=10000, seed=0, q=2):
    """Fill distance ``sup_{x in box} min_i d_q(x, x_i)``.

    ``exact-grid`` maximizes over the Cartesian grid of point coordinates,
    box bounds and midpoints between consecutive coordinates (d <= 3). For
    ``q = 2`` the candidate set also contains every vertex of the box-clipped
    Voronoi diagram, which makes the result exact. ``monte-carlo`` maximizes
    over ``budget`` uniform samples and is a lower bound.
    """
    X = _as_matrix(X)
    n, d = X.shape
    box = DomainBox.unit(d) if box is None else box
    if box.d != d:
        raise InvalidArgumentError(f"box dimension {box.d} does not match design dimension {d}")
    if budget < 1:
        raise InvalidArgumentError("budget must be >= 1")
    q = _check_q(q)
    tree = cKDTree(X)
    if method == "exact-grid":
        if d > 3:
            raise UnsupportedDimensionError("exact-grid fill distance is limited to d <= 3")
        best = _grid_fill(X, box, tree, q)
        if q == 2 and d >= 2:
            best = max(best, _vertex_fill(X, box, tree))
        return best
    if method == "monte-carlo":
        rng = make_rng(seed)
        lo, hi = np.array(box.lower), np.array(box.upper)
        best = 0.0
        for start in range(0, budget, 65536):
            m = min(65536, budget - start)
            pts = lo + (hi - lo) * rng.random((m, d))
            best = max(best, _max_nearest(tree, pts, q))
        return best
    raise InvalidArgumentError(f"unknown fill distance method {method!r}")


# -- projection based -------------------------------------------------------


def _squared_gaps(X):
    """Per-column squared differences over pairs ``i < j``: shape (d, C(n,2))."""
    iu, ju = np.triu_indices(X.shape[0], k=1)
    return (X[iu] - X[ju]).T ** 2


def ard(X, J=(1, 2), lam=1.0):
    """Average reciprocal distance over all projections of orders in ``J``.

    Each projected pair contributes ``(sqrt(k) / sqrt(d_2))^lam`` where
    ``d_2`` is the Euclidean distance in the ``k``-dimensional projection.
    The total is normalised by ``C(n,2) * sum_k C(d,k)`` and raised to
    ``1/lam``.
    """
    X = _as_matrix(X)
    _need_pairs(X)
    n, d = X.shape
    J = sorted({int(k) for k in J})
    if not J or J[0] < 1 or J[-1] > d:
        raise InvalidArgumentError(f"projection orders must be a nonempty subset of 1..{d}, got {J}")
    if lam < 1:
        raise InvalidArgumentError(f"lambda must be >= 1, got {lam}")
    G = _squared_gaps(X)
    total = 0.0
    count = 0
    for k in J:
        for U in itertools.combinations(range(d), k):
            S = G[list(U)].sum(axis=0)
            if np.any(S <= 0.0):
                raise DegenerateDesignError(f"duplicate points in projection {U}")
            total += np.sum(k ** (lam / 2.0) * S ** (-lam / 4.0))
            count += 1
    return float((total / (count * n * (n - 1) / 2.0)) ** (1.0 / lam))


def maxpro(X):
    """Maximum projection criterion, accumulated in log space."""
    X = _as_matrix(X)
    _need_pairs(X)
    n, d = X.shape
    G = _squared_gaps(X)
    if np.any(G <= 0.0):
        raise DegenerateDesignError("MaxPro needs distinct values within every column")
    log_prod = np.log(G).sum(axis=0)
    log_mean = logsumexp(-log_prod) - math.log(n * (n - 1) / 2.0)
    return float(np.exp(log_mean / d))


# -- discrepancy based ------------------------------------------------------


def to_levels(X, s=None):
    """Bin a continuous design into ``s`` levels coded ``0..s-1``."""
    X = _as_matrix(X)
    s = X.shape[0] if s is None else int(s)
    return np.clip(np.floor(s * X).astype(np.int64), 0, s - 1)


def _check_levels(levels, s):
    L = np.asarray(levels)
    if L.ndim == 1:
        L = L[:, None]
    if not np.issubdtype(L.dtype, np.integer):
        if not np.all(L == np.round(L)):
            raise InvalidArgumentError("level matrix must contain integers")
        L = L.astype(np.int64)
    s = int(s)
    if s < 1:
        raise InvalidArgumentError("level count s must be >= 1")
    if L.size and (L.min() < 0 or L.max() > s - 1):
        raise InvalidArgumentError(f"levels must lie in 0..{s - 1}")
    return L, s


def _cd_factors(L, s):
    z = (2.0 * L - s + 1.0) / (2.0 * s)
    az = np.abs(z)
    # F[k] is the n x n pair factor of column k; g[k] the single-point factor
    F = 1.0 + 0.5 * az.T[:, :, None] + 0.5 * az.T[:, None, :] - 0.5 * np.abs(z.T[:, :, None] - z.T[:, None, :])
    g = 1.0 + 0.5 * az.T - 0.5 * az.T**2
    return F, g


def centered_l2_discrepancy(levels, s):
    """Squared centered L2 discrepancy of a level-coded design (levels ``0..s-1``)."""
    L, s = _check_levels(levels, s)
    n, d = L.shape
    F, g = _cd_factors(L, s)
    return float(np.prod(F, axis=0).sum() / n**2 - 2.0 / n * np.prod(g, axis=0).sum() + (13.0 / 12.0) ** d)


def uniform_projection(levels, s):
    """Average centered L2 discrepancy over all two-column projections."""
    L, s = _check_levels(levels, s)
    n, d = L.shape
    if d < 2:
        raise InvalidArgumentError("uniform projection criterion needs d >= 2")
    F, g = _cd_factors(L, s)
    total = 0.0
    for a, b in itertools.combinations(range(d), 2):
        total += (F[a] * F[b]).sum() / n**2 - 2.0 / n * (g[a] * g[b]).sum() + (13.0 / 12.0) ** 2
    return float(2.0 * total / (d * (d - 1)))


def star_discrepancy(X, method="exact", budget=10000, seed=0):
    """Star discrepancy ``sup_x |N([0,x))/n - vol([0,x))|``.

    ``exact`` checks every anchor in the grid of point coordinates and 1,
    using open counts for the volume excess and closed counts for the point
    excess; it is limited to d <= 2. ``monte-carlo`` is a lower bound from
    ``budget`` random anchors.
    """
    X = _as_matrix(X)
    n, d = X.shape
    if method == "exact":
        if d > 2:
            raise UnsupportedDimensionError("exact star discrepancy is limited to d <= 2")
        axes = [np.unique(np.concatenate([X[:, k], [1.0]])) for k in range(d)]
        anchors = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        best = 0.0
        for start in range(0, len(anchors), 4096):
            A = anchors[start:start + 4096]
            vol = np.prod(A, axis=1)
            below = X[None, :, :] < A[:, None, :]
            at_or_below = X[None, :, :] <= A[:, None, :]
            n_open = np.all(below, axis=2).sum(axis=1) / n
            n_closed = np.all(at_or_below, axis=2).sum(axis=1) / n
            best = max(best, float(np.max(vol - n_open)), float(np.max(n_closed - vol)))
        return best
    if method == "monte-carlo":
        if budget < 1:
            raise InvalidArgumentError("budget must be >= 1")
        rng = make_rng(seed)
        best = 0.0
        for start in range(0, budget, 4096):
            A = rng.random((min(4096, budget - start), d))
            frac = np.all(X[None, :, :] < A[:, None, :], axis=2).sum(axis=1) / n
            best = max(best, float(np.max(np.abs(frac - np.prod(A, axis=1)))))
        return best
    raise InvalidArgumentError(f"unknown star discrepancy method {method!r}")


# -- correlation based ------------------------------------------------------


def column_correlations(X, mode="average"):
    """Mean (``average``) or largest (``maximum``) absolute Pearson correlation
    over column pairs."""
    X = _as_matrix(X)
    d = X.shape[1]
    if d < 2:
        raise InvalidArgumentError("column correlations need d >= 2")
    Xc = X - X.mean(axis=0)
    norms = np.sqrt(np.sum(Xc**2, axis=0))
    if np.any(norms == 0.0):
        raise UndefinedCorrelationError("a column is constant")
    R = np.abs((Xc.T @ Xc) / np.outer(norms, norms))
    iu = np.triu_indices(d, k=1)
    vals = np.minimum(R[iu], 1.0)
    if mode == "average":
        return float(vals.mean())
    if mode == "maximum":
        return float(vals.max())
    raise InvalidArgumentError(f"unknown correlation mode {mode!r}")


# -- dispatch ---------------------------------------------------------------


class Kind(str, enum.Enum):
    MIN_DISTANCE = "min_distance"
    PHI_P = "phi_p"
    FILL_DISTANCE = "fill_distance"
    ARD = "ard"
    MAXPRO = "maxpro"
    UP = "up"
    CENTERED_L2 = "centered_l2"
    AVG_ABS_CORRELATION = "avg_abs_correlation"
    MAX_ABS_CORRELATION = "max_abs_correlation"
    STAR_DISCREPANCY = "star_discrepancy"


MAXIMIZE = "maximize"
MINIMIZE = "minimize"


@dataclass(frozen=True)
class CriterionSpec:
    """Which criterion to evaluate and with what parameters.

    ``p=None`` selects :func:`default_p` for the run size; ``s_levels=None``
    bins continuous designs into ``n`` levels for CD and UP. ``method``,
    ``budget`` and ``seed`` only apply to the fill distance and star
    discrepancy estimators.
    """

    kind: Kind
    q: int = 2
    p: int = None
    lam: float = 1.0
    J: tuple = (1, 2)
    s_levels: int = None
    method: str = None
    budget: int = 10000
    seed: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "J", tuple(sorted({int(k) for k in self.J})))
        if self.q < 1:
            raise InvalidArgumentError("q must be >= 1")
        if self.p is not None and self.p < 1:
            raise InvalidArgumentError("p must be >= 1")
        if self.lam < 1:
            raise InvalidArgumentError("lambda must be >= 1")
        if self.kind is Kind.ARD and not self.J:
            raise InvalidArgumentError("ARD needs a nonempty set of projection orders")

    @property
    def direction(self):
        return MAXIMIZE if self.kind is Kind.MIN_DISTANCE else MINIMIZE

    def resolved_p(self, n):
        return default_p(n) if self.p is None else self.p

    def to_dict(self):
        out = {"kind": self.kind.value, "direction": self.direction}
        if self.kind in (Kind.MIN_DISTANCE, Kind.PHI_P, Kind.FILL_DISTANCE):
            out["q"] = self.q
        if self.kind is Kind.PHI_P:
            out["p"] = self.p
        if self.kind is Kind.ARD:
            out.update(J=list(self.J), lam=self.lam)
        if self.kind in (Kind.UP, Kind.CENTERED_L2):
            out["s_levels"] = self.s_levels
        return out


def evaluate(X, spec):
    """Evaluate ``spec`` on design ``X``; ``spec.direction`` says which way is better."""
    X = _as_matrix(X)
    kind = spec.kind
    if kind is Kind.MIN_DISTANCE:
        return min_interpoint_distance(X, spec.q)
    if kind is Kind.PHI_P:
        return phi_p(X, spec.q, spec.resolved_p(X.shape[0]))
    if kind is Kind.FILL_DISTANCE:
        return fill_distance_estimate(X, method=spec.method or "exact-grid", budget=spec.budget, seed=spec.seed, q=spec.q)
    if kind is Kind.ARD:
        return ard(X, spec.J, spec.lam)
    if kind is Kind.MAXPRO:
        return maxpro(X)
    if kind in (Kind.UP, Kind.CENTERED_L2):
        s = X.shape[0] if spec.s_levels is None else spec.s_levels
        L = to_levels(X, s)
        return uniform_projection(L, s) if kind is Kind.UP else centered_l2_discrepancy(L, s)
    if kind is Kind.AVG_ABS_CORRELATION:
        return column_correlations(X, "average")
    if kind is Kind.MAX_ABS_CORRELATION:
        return column_correlations(X, "maximum")
    if kind is Kind.STAR_DISCREPANCY:
        return star_discrepancy(X, method=spec.method or "exact", budget=spec.budget, seed=spec.seed)
    raise InvalidArgumentError(f"unknown criterion {kind!r}")
