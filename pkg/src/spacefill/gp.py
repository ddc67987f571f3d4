"""Ordinary kriging with a constant mean.

Kernels are anisotropic Gaussian or Matern-3/2 correlations parameterised by
non-negative inverse squared length-scales ``theta``. The mean and process
variance are profiled out in closed form and ``(theta, eta)`` are chosen by
multistart L-BFGS-B on the profile likelihood in log coordinates.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .design import random_latin_hypercube, realize
from .errors import DegenerateDataError, FitFailure, InvalidArgumentError

GAUSSIAN = "gaussian"
MATERN32 = "matern32"
FAMILIES = (GAUSSIAN, MATERN32)
SQRT3 = math.sqrt(3.0)
JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class KernelSpec:
    family: str
    theta: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown kernel family {self.family!r}")
        theta = tuple(float(t) for t in np.ravel(self.theta))
        if any(t < 0 or not math.isfinite(t) for t in theta):
            raise InvalidArgumentError("theta must be finite and non-negative")
        object.__setattr__(self, "theta", theta)

    @property
    def nu(self):
        return 1.5 if self.family == MATERN32 else math.inf


def _correlation(family, r2):
    if family == GAUSSIAN:
        return np.exp(-r2)
    r = SQRT3 * np.sqrt(r2)
    return (1.0 + r) * np.exp(-r)


def _weighted_sq(A, B, theta):
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,k->ij", diff**2, theta)


def kernel_eval(spec, a, b):
    """Correlation between two points."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.shape[0] != len(spec.theta):
        raise InvalidArgumentError("point dimensions do not match the kernel")
    r2 = float(np.sum(np.asarray(spec.theta) * (a - b) ** 2))
    return float(_correlation(spec.family, r2))


def kernel_matrix(spec, A, B=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    theta = np.asarray(spec.theta)
    if A.shape[1] != theta.shape[0] or B.shape[1] != theta.shape[0]:
        raise InvalidArgumentError("point dimensions do not match the kernel")
    return _correlation(spec.family, _weighted_sq(A, B, theta))


def factorize(C):
    """Lower Cholesky factor of ``C``, escalating diagonal jitter on failure.

    Returns ``(L, jitter)``; raises :class:`FitFailure` if the ladder runs out.
    """
    try:
        return cholesky(C, lower=True, check_finite=True), 0.0
    except (LinAlgError, ValueError):
        pass
    n = C.shape[0]
    for jit in JITTER_LADDER:
        try:
            return cholesky(C + jit * np.eye(n), lower=True), jit
        except LinAlgError:
            continue
    raise FitFailure("covariance matrix is not positive definite even with jitter 1e-6")


def closed_form_estimates(L, y):
    """Generalised least squares mean and variance given the factor ``L`` of ``K + eta I``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    ones = np.ones(n)
    Ci1 = cho_solve((L, True), ones)
    Ciy = cho_solve((L, True), y)
    denom = ones @ Ci1
    if not denom > 0:
        raise FitFailure("singular system when estimating the mean")
    mu = float(y @ Ci1 / denom)
    r = y - mu
    tau2 = float(r @ cho_solve((L, True), r) / n)
    return mu, tau2


@dataclass(frozen=True)
class FitConfig:
    """Hyper-parameter search settings (bounds are on natural logs).

    ``fixed_eta`` pins the nugget (``0.0`` gives an interpolator);
    ``fixed_theta`` pins the correlation parameters.
    """

    theta_bounds: tuple = (math.log(1e-3), math.log(1e3))
    eta_bounds: tuple = (math.log(1e-8), math.log(1.0))
    fixed_eta: float = None
    fixed_theta: tuple = None
    multistart_count: int = 5
    max_objective_evals: int = 200
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.theta_bounds, self.eta_bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidArgumentError("bounds must be finite with lower < upper")
        if self.multistart_count < 1:
            raise InvalidArgumentError("multistart_count must be >= 1")
        if self.fixed_eta is not None and self.fixed_eta < 0:
            raise InvalidArgumentError("fixed_eta must be non-negative")

    def to_dict(self):
        return {
            "theta_bounds": list(self.theta_bounds),
            "eta_bounds": list(self.eta_bounds),
            "fixed_eta": self.fixed_eta,
            "fixed_theta": list(self.fixed_theta) if self.fixed_theta is not None else None,
            "multistart_count": self.multistart_count,
            "max_objective_evals": self.max_objective_evals,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class GPModel:
    kernel: KernelSpec
    eta: float
    mu_hat: float
    tau2_hat: float
    train_X: np.ndarray
    train_y: np.ndarray
    factor: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0
    objective: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.train_X.shape[0]

    @property
    def d(self):
        return self.train_X.shape[1]

    def predict(self, X):
        return predict_mean(self, X)

    def summary(self):
        return {
            "family": self.kernel.family,
            "theta": list(self.kernel.theta),
            "eta": self.eta,
            "mu_hat": self.mu_hat,
            "tau2_hat": self.tau2_hat,
            "n": self.n,
            "d": self.d,
        }

    def to_dict(self):
        out = self.summary()
        out.update(jitter=self.jitter, objective=self.objective, meta=self.meta,
                   train_X=self.train_X.tolist(), train_y=self.train_y.tolist())
        return out

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        """Rebuild a model from :meth:`to_dict` output (refactorises the covariance)."""
        kernel = KernelSpec(data["family"], data["theta"])
        return condition(kernel, data["eta"], data["train_X"], data["train_y"], meta=data.get("meta", {}))


def condition(kernel, eta, X, y, meta=None):
    """Condition a GP with fixed hyper-parameters on data ``(X, y)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise InvalidArgumentError("X and y have different numbers of rows")
    C = kernel_matrix(kernel, X) + eta * np.eye(X.shape[0])
    L, jit = factorize(C)
    mu, tau2 = closed_form_estimates(L, y)
    alpha = cho_solve((L, True), y - mu)
    n = X.shape[0]
    obj = n * math.log(max(tau2, 1e-300)) + 2.0 * float(np.sum(np.log(np.diag(L))))
    return GPModel(kernel, float(eta), mu, max(tau2, np.finfo(float).tiny), X.copy(), y.copy(),
                   L, alpha, jit, obj, dict(meta or {}))


def profile_negative_log_likelihood(theta, eta, X, y, family=MATERN32):
    """``n log(tau2_hat) + log det(K + eta I)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    kernel = KernelSpec(family, theta)
    C = kernel_matrix(kernel, X) + eta * np.eye(X.shape[0])
    L, _ = factorize(C)
    _, tau2 = closed_form_estimates(L, y)
    if not tau2 > 0:
        raise FitFailure("estimated process variance is zero")
    return X.shape[0] * math.log(tau2) + 2.0 * float(np.sum(np.log(np.diag(L))))


class _Objective:
    """Profile likelihood and its gradient in ``log theta`` / ``log eta``."""

    def __init__(self, X, y, family, fixed_eta, fixed_theta):
        self.X, self.y, self.family = X, y, family
        self.n, self.d = X.shape
        self.fixed_eta = fixed_eta
        self.fixed_theta = fixed_theta
        self.sq = (X[:, None, :] - X[None, :, :]) ** 2
        self.evals = 0

    def unpack(self, params):
        k = 0
        if self.fixed_theta is None:
            theta = np.exp(params[: self.d])
            k = self.d
        else:
            theta = np.asarray(self.fixed_theta, dtype=float)
        eta = self.fixed_eta if self.fixed_eta is not None else math.exp(params[k])
        return theta, eta

    def __call__(self, params):
        self.evals += 1
        theta, eta = self.unpack(params)
        n = self.n
        r2 = self.sq @ theta
        if self.family == GAUSSIAN:
            K = np.exp(-r2)
            dK_base = -K
        else:
            r = SQRT3 * np.sqrt(r2)
            e = np.exp(-r)
            K = (1.0 + r) * e
            dK_base = -1.5 * e
        C = K + eta * np.eye(n)
        try:
            L, jit = factorize(C)
        except FitFailure:
            return 1e10, np.zeros_like(params)
        ones = np.ones(n)
        Ci1 = cho_solve((L, True), ones)
        mu = float(self.y @ Ci1 / (ones @ Ci1))
        res = self.y - mu
        alpha = cho_solve((L, True), res)
        tau2 = float(res @ alpha) / n
        if not tau2 > 0 or not math.isfinite(tau2):
            return 1e10, np.zeros_like(params)
        value = n * math.log(tau2) + 2.0 * float(np.sum(np.log(np.diag(L))))
        Linv = solve_triangular(L, np.eye(n), lower=True)
        Cinv = Linv.T @ Linv
        # d f = tr(C^-1 dC) - alpha^T dC alpha / tau2
        W = Cinv - np.outer(alpha, alpha) / tau2
        grad = []
        if self.fixed_theta is None:
            # dC/dlog(theta_k) = theta_k * sq_k * dK_base
            G = np.einsum("ij,ijk->k", W * dK_base, self.sq) * theta
            grad.extend(G)
        if self.fixed_eta is None:
            grad.append(eta * float(np.trace(W)))
        return value, np.asarray(grad)


def _has_duplicates(X):
    return len(np.unique(X, axis=0)) < X.shape[0]


def fit(X, y, family=MATERN32, config=None):
    """Fit an ordinary-kriging model by maximising the profile likelihood.

    Parameters
    ----------
    X : array, shape (n, d)
        Inputs, assumed scaled to the unit cube.
    y : array, shape (n,)
    family : {"matern32", "gaussian"}
    config : FitConfig, optional

    Returns
    -------
    GPModel
    """
    config = FitConfig() if config is None else config
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 2:
        raise InvalidArgumentError("fitting needs at least 2 points")
    if y.shape[0] != n:
        raise InvalidArgumentError("X and y have different numbers of rows")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("outputs contain non-finite values")
    if config.fixed_eta == 0.0 and _has_duplicates(X):
        raise DegenerateDataError("duplicate design rows with a zero nugget")
    meta = {"family": family, "output_scaling": "none",
            "eta_mode": "fixed" if config.fixed_eta is not None else "estimated",
            "config": config.to_dict()}

    fixed_theta = None if config.fixed_theta is None else np.asarray(config.fixed_theta, dtype=float)
    if fixed_theta is not None and fixed_theta.shape != (d,):
        raise InvalidArgumentError(f"fixed_theta must have {d} entries")

    # constant outputs carry no information about the correlation
    if np.ptp(y) == 0.0:
        theta = fixed_theta if fixed_theta is not None else np.full(d, math.exp(np.mean(config.theta_bounds)))
        eta = config.fixed_eta if config.fixed_eta is not None else math.exp(config.eta_bounds[0])
        return condition(KernelSpec(family, theta), eta, X, y, meta)

    # centring leaves the objective unchanged and keeps the solves well scaled
    shift = float(np.mean(y))
    obj = _Objective(X, y - shift, family, config.fixed_eta, fixed_theta)
    bounds = []
    if fixed_theta is None:
        bounds += [config.theta_bounds] * d
    if config.fixed_eta is None:
        bounds += [config.eta_bounds]

    if not bounds:
        theta, eta = fixed_theta, config.fixed_eta
    else:
        starts = realize(random_latin_hypercube(config.multistart_count, len(bounds), config.seed))
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        best = None
        for x0 in lo + (hi - lo) * starts:
            res = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxfun": config.max_objective_evals})
            if math.isfinite(res.fun) and res.fun < 1e10 and (best is None or res.fun < best.fun):
                best = res
        if best is None:
            raise FitFailure("profile likelihood was not finite at any start")
        theta, eta = obj.unpack(best.x)
    model = condition(KernelSpec(family, theta), eta, X, y, meta)
    model.meta["objective_evals"] = obj.evals
    return model


def predict_mean(model, x):
    """Conditional mean ``mu_hat + k(x)^T alpha`` at one point or a matrix of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Q = np.atleast_2d(x)
    if Q.shape[1] != model.d:
        raise InvalidArgumentError(f"query dimension {Q.shape[1]} does not match model dimension {model.d}")
    pred = model.mu_hat + kernel_matrix(model.kernel, Q, model.train_X) @ model.alpha
    return float(pred[0]) if single else pred
