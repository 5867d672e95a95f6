import math

import numpy as np
import pytest
from scipy.stats import norm

from acls.errors import InsufficientInliersError
from acls.estimators import FitResult, Solver, fit_ols
from acls.inference import mape, mse, residual_variance_ols, robust_inference, two_sided_normal_p
from acls.loss import Dataset, LossConfig


def _fit(beta):
    beta = np.asarray(beta, dtype=float)
    return FitResult(beta, 0.0, np.ones(1, bool), 0, 0, Solver.OLS, 0.0)


def test_clean_data_reduces_to_classical(rng):
    X = rng.standard_normal((60, 2))
    y = 1 + X @ [2.0, -1.0] + rng.standard_normal(60)
    data = Dataset(X, y, add_intercept=True)
    fit = fit_ols(data)
    r = y - data.design @ fit.beta
    rep = robust_inference(data, fit, LossConfig(1e6))
    assert rep.n_effective == 60
    assert rep.sigma2_hat == pytest.approx(np.mean(r * r), rel=1e-12)
    np.testing.assert_allclose(rep.sigma_tau_hat, data.design.T @ data.design / 60, rtol=1e-12)
    G = np.linalg.inv(data.design.T @ data.design / 60)
    np.testing.assert_allclose(rep.se, np.sqrt(rep.sigma2_hat) * np.sqrt(np.diag(G) / 60), rtol=1e-10)
    assert np.all(rep.se > 0)


def test_only_inliers_enter(rng):
    X = rng.standard_normal((40, 1))
    y = X[:, 0] + 0.1 * rng.standard_normal(40)
    y[:4] += 50
    data = Dataset(X, y)
    rep = robust_inference(data, _fit([1.0]), LossConfig(1.0))
    inl = np.abs(y - X[:, 0]) <= 1.0
    assert rep.n_effective == inl.sum() == 36
    assert rep.sigma2_hat == pytest.approx(np.mean((y - X[:, 0])[inl] ** 2))


def test_zero_coefficient_has_unit_p_value(rng):
    X = rng.standard_normal((30, 2))
    data = Dataset(X, rng.standard_normal(30))
    rep = robust_inference(data, _fit([0.0, 0.5]), LossConfig(10.0))
    assert rep.p_values[0] == 1.0


def test_permutation_invariance(rng):
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    perm = rng.permutation(30)
    a = robust_inference(Dataset(X, y), _fit([0.1, 0.2]), LossConfig(1.5))
    b = robust_inference(Dataset(X[perm], y[perm]), _fit([0.1, 0.2]), LossConfig(1.5))
    assert a.sigma2_hat == pytest.approx(b.sigma2_hat, rel=1e-14)
    np.testing.assert_allclose(a.sigma_tau_hat, b.sigma_tau_hat, rtol=1e-14)


def test_insufficient_inliers():
    data = Dataset(np.ones((3, 1)), np.array([0.0, 10.0, 20.0]))
    with pytest.raises(InsufficientInliersError):
        robust_inference(data, _fit([0.0]), LossConfig(1.0))


def test_p_value_matches_normal_tail():
    z = np.linspace(-6, 6, 41)
    np.testing.assert_allclose(two_sided_normal_p(z), 2 * norm.sf(np.abs(z)), atol=1e-12)


def test_metrics(rng):
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([0.0, 3.0], [0.0, 0.0]) == 9.0
    a, b = rng.standard_normal(5), rng.standard_normal(5)
    assert mse(a, b) == pytest.approx(sum((u - v) ** 2 for u, v in zip(a, b)))
    data = Dataset(np.ones((2, 1)), np.array([1.0, 3.0]))
    assert mape(data, [0.0]) == 2.0
    assert mape(data.with_response(np.zeros(2)), [0.0]) == 0.0
    x = np.arange(5.0)
    assert residual_variance_ols(Dataset(x, x, add_intercept=True)) == pytest.approx(0.0, abs=1e-25)
    X = rng.standard_normal((20, 2))
    y = rng.standard_normal(20)
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    assert residual_variance_ols(Dataset(X, y)) == pytest.approx(np.mean((y - X @ beta) ** 2), rel=1e-12)


def test_report_serializes():
    import json

    data = Dataset(np.ones((5, 1)), np.array([0.1, -0.2, 0.05, 0.0, 0.3]))
    json.dumps(robust_inference(data, _fit([0.0]), LossConfig(1.0)).to_dict())
