import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from semicont.data import DataError, Dataset
from semicont.glm import SingularDesignError
from semicont.tobit import censored_mean, tobit_fit, tobit_gradient, tobit_loglik, tobit_predict


def tobit_data(n, beta, sigma, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, len(beta) - 1))
    data = Dataset.from_arrays(np.zeros(n), X)
    latent = data.design @ np.asarray(beta) + sigma * rng.standard_normal(n)
    return data.with_response(np.maximum(latent, 0.0))


@pytest.fixture(scope="module")
def censored():
    return tobit_data(2000, [0.5, 1.0, -0.7], 1.5, seed=31)


def test_censor_free_matches_ols():
    data = tobit_data(300, [100.0, 2.0, -1.5], 1.0, seed=3)
    assert np.all(data.response > 0)
    fit = tobit_fit(data)
    X, y = data.design, data.response
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(fit.coefficients, ols, rtol=1e-6)
    resid_var = np.mean((y - X @ ols) ** 2)
    assert fit.sigma ** 2 == pytest.approx(resid_var, rel=1e-6)


def test_loglik_against_scipy(censored):
    theta = np.array([0.4, 0.9, -0.6, math.log(1.3)])
    X, y = censored.design, censored.response
    xb = X @ theta[:-1]
    zero = y == 0
    ref = (stats.norm.logcdf(-xb[zero] / 1.3).sum()
           + stats.norm.logpdf(y[~zero], xb[~zero], 1.3).sum())
    assert tobit_loglik(theta, X, y) == pytest.approx(ref, rel=1e-12)


def test_gradient_matches_finite_differences():
    data = tobit_data(100, [0.3, 0.8, -0.5], 1.2, seed=5)
    X, y = data.design, data.response
    theta = np.array([0.25, 0.7, -0.4, math.log(1.1)])
    g = tobit_gradient(theta, X, y)
    num = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = 1e-6
        num[j] = (tobit_loglik(theta + e, X, y) - tobit_loglik(theta - e, X, y)) / 2e-6
    np.testing.assert_allclose(g, num, rtol=1e-5)


def test_fit_recovers_and_converges(censored):
    fit = tobit_fit(censored)
    assert fit.converged and fit.sigma > 0
    assert np.all(np.isfinite(fit.standard_errors)) and np.all(fit.standard_errors > 0)
    assert np.all(np.abs(fit.coefficients - [0.5, 1.0, -0.7]) < 4 * fit.standard_errors)
    assert abs(fit.sigma - 1.5) < 4 * fit.sigma_se
    theta = np.append(fit.coefficients, math.log(fit.sigma))
    assert fit.log_likelihood == pytest.approx(tobit_loglik(theta, censored.design, censored.response))


def test_loglik_invariant_to_row_order(censored):
    fit = tobit_fit(censored)
    perm = np.random.default_rng(0).permutation(censored.n)
    shuffled = Dataset(censored.response[perm], censored.design[perm], censored.names)
    other = tobit_fit(shuffled)
    assert other.log_likelihood == pytest.approx(fit.log_likelihood, rel=1e-10)
    np.testing.assert_allclose(other.coefficients, fit.coefficients, rtol=1e-6)


def test_rejects_all_zero():
    data = tobit_data(50, [100.0, 1.0], 1.0, seed=1)
    with pytest.raises(DataError):
        tobit_fit(data.with_response(np.zeros(50)))


def test_collinear_design(censored):
    X = np.column_stack([censored.design, censored.design[:, 1]])
    with pytest.raises(SingularDesignError):
        tobit_fit(Dataset(censored.response, X, (*censored.names, "dup")))


def test_censored_mean_cases():
    sigma = 3.0
    assert censored_mean(0.0, sigma) == pytest.approx(sigma / math.sqrt(2 * math.pi), rel=1e-15)
    assert censored_mean(10 * sigma, sigma) == pytest.approx(10 * sigma, rel=1e-15)
    # direct evaluation of Phi(1) + phi(1)
    assert censored_mean(sigma, sigma) == pytest.approx(1.0833154705876863 * sigma, rel=1e-14)


@given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e4))
def test_prediction_nonnegative(xb, sigma):
    assert censored_mean(xb, sigma) >= 0.0


def test_predict_row(censored):
    fit = tobit_fit(censored)
    row = censored.design[3]
    assert tobit_predict(fit, row) == pytest.approx(float(fit.predict(row[None, :])[0]))
