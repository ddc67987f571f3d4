import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacefill.design import random_latin_hypercube, realize
from spacefill.errors import DegenerateDataError, InvalidArgumentError
from spacefill.gp import (
    GAUSSIAN, MATERN32, FitConfig, GPModel, KernelSpec, closed_form_estimates, condition, factorize, fit,
    kernel_eval, kernel_matrix, predict_mean, profile_negative_log_likelihood,
)
from spacefill.testbed import eval_simulator


def lhd(n, d, seed):
    return realize(random_latin_hypercube(n, d, seed))


def dense_estimates(C, y):
    one = np.ones(len(y))
    Ci_y = np.linalg.solve(C, y)
    Ci_1 = np.linalg.solve(C, one)
    mu = (one @ Ci_y) / (one @ Ci_1)
    r = y - mu
    return mu, r @ np.linalg.solve(C, r) / len(y)


def test_kernel_values():
    for fam in (GAUSSIAN, MATERN32):
        assert kernel_eval(KernelSpec(fam, [2.0, 0.3]), [0.1, 0.4], [0.1, 0.4]) == 1.0
    assert kernel_eval(KernelSpec(GAUSSIAN, [1.0]), [0.0], [1.0]) == pytest.approx(math.exp(-1))
    r3 = math.sqrt(3)
    assert kernel_eval(KernelSpec(MATERN32, [1.0]), [0.0], [1.0]) == pytest.approx((1 + r3) * math.exp(-r3))
    with pytest.raises(InvalidArgumentError):
        KernelSpec(GAUSSIAN, [-1.0])
    with pytest.raises(InvalidArgumentError):
        kernel_eval(KernelSpec(GAUSSIAN, [1.0, 1.0]), [0.0], [1.0])


@pytest.mark.parametrize("family", [GAUSSIAN, MATERN32])
def test_kernel_matrix_properties(family):
    X = lhd(15, 3, 2)
    K = kernel_matrix(KernelSpec(family, [3.0, 1.0, 0.5]), X)
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    assert np.all((K > 0) & (K <= 1))
    spec = KernelSpec(family, [3.0, 1.0, 0.5])
    assert K[2, 7] == pytest.approx(kernel_eval(spec, X[2], X[7]), rel=1e-14)


def test_closed_form_identity_like():
    X = np.array([[0.0], [0.5], [1.0]])
    y = np.array([1.0, 4.0, -2.0])
    L, _ = factorize(kernel_matrix(KernelSpec(GAUSSIAN, [1e4]), X))
    mu, tau2 = closed_form_estimates(L, y)
    assert mu == pytest.approx(y.mean())
    assert tau2 == pytest.approx(np.mean((y - y.mean()) ** 2))


def test_closed_form_constant_and_oracle():
    X = np.sort(np.random.default_rng(0).random((8, 1)), axis=0)
    C = kernel_matrix(KernelSpec(MATERN32, [5.0]), X) + 1e-3 * np.eye(8)
    L, _ = factorize(C)
    mu, tau2 = closed_form_estimates(L, np.full(8, 2.5))
    assert mu == pytest.approx(2.5) and abs(tau2) < 1e-12
    y = np.sin(6 * X[:, 0])
    mu, tau2 = closed_form_estimates(L, y)
    mu_o, tau2_o = dense_estimates(C, y)
    assert mu == pytest.approx(mu_o, rel=1e-10)
    assert tau2 == pytest.approx(tau2_o, rel=1e-10)


def test_profile_objective_two_points():
    X = np.array([[0.2], [0.7]])
    y = np.array([1.0, 3.0])
    theta, eta = 2.0, 0.1
    rho = math.exp(-theta * 0.25)
    a = 1 + eta
    # C = [[a, rho], [rho, a]]: symmetric, so mu is the mean and the residual is (-1, 1)
    det = a * a - rho * rho
    tau2 = ((-1) ** 2 * a - 2 * (-1) * 1 * rho + a) / det / 2
    expected = 2 * math.log(tau2) + math.log(det)
    assert profile_negative_log_likelihood([theta], eta, X, y, GAUSSIAN) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("family", [GAUSSIAN, MATERN32])
def test_profile_objective_scaling_and_dense_oracle(family):
    X = lhd(12, 2, 4)
    y = np.cos(3 * X[:, 0]) + X[:, 1]
    theta, eta = [4.0, 0.7], 1e-4
    base = profile_negative_log_likelihood(theta, eta, X, y, family)
    c = 3.7
    assert profile_negative_log_likelihood(theta, eta, X, c * y, family) == pytest.approx(
        base + 2 * 12 * math.log(c), rel=1e-10)
    C = kernel_matrix(KernelSpec(family, theta), X) + eta * np.eye(12)
    _, tau2 = dense_estimates(C, y)
    dense = 12 * math.log(tau2) + math.log(np.linalg.det(C))
    assert base == pytest.approx(dense, rel=1e-8)


def test_profile_objective_finite_over_bounds():
    X = lhd(20, 5, 7)
    y = eval_simulator("friedman", X)
    for lt in np.linspace(math.log(1e-3), math.log(1e3), 5):
        for le in np.linspace(math.log(1e-8), 0.0, 5):
            v = profile_negative_log_likelihood(np.full(5, math.exp(lt)), math.exp(le), X, y, MATERN32)
            assert math.isfinite(v)


def test_constant_response():
    X = lhd(10, 2, 1)
    model = fit(X, np.full(10, 4.2))
    W = np.random.default_rng(0).random((20, 2))
    np.testing.assert_allclose(predict_mean(model, W), 4.2, atol=1e-9)


def test_fit_is_deterministic():
    X = lhd(20, 3, 3)
    y = eval_simulator("detpep10", X)
    a = fit(X, y, MATERN32, FitConfig(seed=5))
    b = fit(X, y, MATERN32, FitConfig(seed=5))
    assert a.summary() == b.summary()


def test_fit_beats_mean_predictor_on_sine():
    X = lhd(30, 1, 0)
    y = np.sin(2 * np.pi * X[:, 0])
    model = fit(X, y)
    W = np.linspace(0.01, 0.99, 97)[:, None]
    truth = np.sin(2 * np.pi * W[:, 0])
    err = np.sqrt(np.mean((predict_mean(model, W) - truth) ** 2))
    assert err < np.sqrt(np.mean((truth - y.mean()) ** 2))
    assert err < 0.01


@pytest.mark.parametrize("family", [GAUSSIAN, MATERN32])
def test_interpolation_and_mean_reversion(family):
    X = lhd(15, 2, 6)
    y = X[:, 0] ** 2 + np.sin(4 * X[:, 1])
    model = fit(X, y, family, FitConfig(fixed_eta=0.0))
    assert np.max(np.abs(predict_mean(model, X) - y)) < 1e-6
    far = condition(model.kernel, 0.0, X, y)
    assert predict_mean(far, np.array([1e3, -1e3])) == pytest.approx(far.mu_hat, abs=1e-12)


def test_prediction_matches_dense_oracle():
    X = np.array([[0.1], [0.3], [0.45], [0.7], [0.95]])
    y = np.array([0.2, -1.0, 0.5, 2.0, 1.1])
    kern, eta = KernelSpec(MATERN32, [9.0]), 1e-3
    model = condition(kern, eta, X, y)
    C = kernel_matrix(kern, X) + eta * np.eye(5)
    mu, _ = dense_estimates(C, y)
    xs = np.array([[0.05], [0.5], [0.8]])
    k = kernel_matrix(kern, xs, X)
    oracle = mu + k @ np.linalg.solve(C, y - mu)
    np.testing.assert_allclose(predict_mean(model, xs), oracle, rtol=1e-10)
    assert isinstance(predict_mean(model, [0.5]), float)
    with pytest.raises(InvalidArgumentError):
        predict_mean(model, np.array([[0.1, 0.2]]))


def test_factor_reconstructs_covariance():
    X = lhd(25, 3, 1)
    model = condition(KernelSpec(GAUSSIAN, [2.0, 2.0, 2.0]), 1e-6, X, X.sum(axis=1))
    C = kernel_matrix(model.kernel, X) + (model.eta + model.jitter) * np.eye(25)
    np.testing.assert_allclose(model.factor @ model.factor.T, C, rtol=1e-8, atol=1e-12)
    assert model.tau2_hat > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(-50, 50))
def test_permutation_invariance_and_translation(seed, c):
    X = lhd(12, 2, seed % 1000)
    y = np.sin(5 * X[:, 0]) * X[:, 1]
    kern = KernelSpec(MATERN32, [6.0, 3.0])
    base = condition(kern, 1e-6, X, y)
    perm = np.random.default_rng(seed).permutation(12)
    W = np.random.default_rng(seed + 1).random((10, 2))
    np.testing.assert_allclose(predict_mean(condition(kern, 1e-6, X[perm], y[perm]), W),
                               predict_mean(base, W), rtol=1e-9, atol=1e-10)
    shifted = condition(kern, 1e-6, X, y + c)
    np.testing.assert_allclose(predict_mean(shifted, W), predict_mean(base, W) + c, rtol=0, atol=1e-9)


def test_duplicates_without_nugget():
    X = np.array([[0.1, 0.2], [0.1, 0.2], [0.7, 0.9]])
    with pytest.raises(DegenerateDataError):
        fit(X, np.array([1.0, 1.5, 2.0]), config=FitConfig(fixed_eta=0.0))
    assert math.isfinite(fit(X, np.array([1.0, 1.5, 2.0])).eta)


def test_model_json_round_trip():
    X = lhd(10, 2, 3)
    y = X[:, 0] - X[:, 1]
    model = fit(X, y)
    data = json.loads(model.to_json())
    assert set(model.summary()) == {"family", "theta", "eta", "mu_hat", "tau2_hat", "n", "d"}
    again = GPModel.from_dict(data)
    W = np.random.default_rng(1).random((5, 2))
    np.testing.assert_allclose(predict_mean(again, W), predict_mean(model, W), rtol=1e-12)


def test_fit_config_validation():
    with pytest.raises(InvalidArgumentError):
        FitConfig(theta_bounds=(1.0, 0.0))
    with pytest.raises(InvalidArgumentError):
        FitConfig(multistart_count=0)
    with pytest.raises(InvalidArgumentError):
        fit(np.array([[0.5]]), np.array([1.0]))
