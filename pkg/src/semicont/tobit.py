"""Tobit (type I) regression: a latent normal linear model censored below at zero."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.special import log_ndtr, ndtr

from .data import DataError, Dataset
from .glm import ConvergenceError, SingularDesignError

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TobitFit:
    coefficients: np.ndarray
    sigma: float
    log_likelihood: float
    converged: bool
    standard_errors: np.ndarray
    sigma_se: float
    names: tuple[str, ...] = ()
    iterations: int = 0
    n_obs: int = 0

    @property
    def dispersion(self) -> float:
        return 1.0

    def predict(self, X) -> np.ndarray:
        return censored_mean(np.asarray(X, dtype=float) @ self.coefficients, self.sigma)

    def to_dict(self) -> dict:
        return {
            "family": {"name": "tobit"},
            "coefficients": dict(zip(self.names, map(float, self.coefficients))),
            "standard_errors": dict(zip(self.names, map(float, self.standard_errors))),
            "sigma": float(self.sigma),
            "sigma_se": float(self.sigma_se),
            "dispersion": 1.0,
            "log_likelihood": float(self.log_likelihood),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "n_obs": int(self.n_obs),
        }


def _split(theta):
    return theta[:-1], theta[-1]


def _mills(a):
    # phi(a) / Phi(a), stable for very negative a
    return np.exp(-0.5 * a * a - LOG_SQRT_2PI - log_ndtr(a))


def tobit_loglik(theta, X, y) -> float:
    """Log-likelihood in (beta, log sigma)."""
    beta, log_sigma = _split(theta)
    sigma = math.exp(log_sigma)
    xb = X @ beta
    cens = y <= 0
    ll = np.sum(log_ndtr(-xb[cens] / sigma))
    r = (y[~cens] - xb[~cens]) / sigma
    ll += np.sum(-0.5 * r * r - LOG_SQRT_2PI) - (~cens).sum() * log_sigma
    return float(ll)


def tobit_gradient(theta, X, y) -> np.ndarray:
    """Analytic gradient of :func:`tobit_loglik` in (beta, log sigma)."""
    beta, log_sigma = _split(theta)
    sigma = math.exp(log_sigma)
    xb = X @ beta
    cens = y <= 0
    a = -xb[cens] / sigma
    lam = _mills(a)
    r = (y[~cens] - xb[~cens]) / sigma
    g_beta = -(X[cens].T @ lam) / sigma + (X[~cens].T @ r) / sigma
    # d/dlog(sigma) of log Phi(-xb/sigma) is lam * xb / sigma = -lam * a
    g_ls = np.sum(-lam * a) + np.sum(r * r - 1.0)
    return np.append(g_beta, g_ls)


def tobit_hessian(theta, X, y) -> np.ndarray:
    """Analytic Hessian of :func:`tobit_loglik` in (beta, log sigma)."""
    beta, log_sigma = _split(theta)
    sigma = math.exp(log_sigma)
    xb = X @ beta
    cens = y <= 0
    a = -xb[cens] / sigma
    lam = _mills(a)
    # d lam / d a = -lam * (a + lam)
    dlam = -lam * (a + lam)
    Xc, Xu = X[cens], X[~cens]
    r = (y[~cens] - xb[~cens]) / sigma
    k = X.shape[1]
    H = np.empty((k + 1, k + 1))
    # censored part: g_beta_c = -x lam / sigma, a = -xb / sigma
    # d/dbeta: -x (dlam * (-x / sigma)) / sigma
    H_bb = (Xc.T * dlam) @ Xc / sigma ** 2 - (Xu.T @ Xu) / sigma ** 2
    # d/dlog sigma of -x lam / sigma: da/dls = -a
    h_bs = Xc.T @ (-(dlam * -a) / sigma + lam / sigma) + Xu.T @ (-2.0 * r) / sigma
    # d/dls of -lam*a: -(dlam * -a) * a - lam * -a
    h_ss = np.sum(dlam * a * a + lam * a) + np.sum(-2.0 * r * r)
    H[:k, :k] = H_bb
    H[:k, k] = h_bs
    H[k, :k] = h_bs
    H[k, k] = h_ss
    return H


def _ols(X, y):
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise SingularDesignError(f"design is rank deficient (rank {rank} < {X.shape[1]})")
    return linalg.lstsq(X, y)[0]


def tobit_fit(data: Dataset, gtol: float = 1e-6, max_iter: int = 500) -> TobitFit:
    """Maximum likelihood Tobit fit.

    Quasi-Newton (BFGS with the analytic gradient) from OLS starting values,
    then Newton polishing with the analytic Hessian.  Standard errors are
    from the inverse observed information.
    """
    X, y = data.design, data.response
    if not np.any(y > 0):
        raise DataError("Tobit needs at least one positive response")
    beta0 = _ols(X, y)
    resid = y - X @ beta0
    theta = np.append(beta0, math.log(max(np.std(resid), 1e-12)))

    # optimise in units where the coefficients are of order one
    scale = np.append(np.maximum(np.abs(beta0), np.std(y) * 1e-3), 1.0)
    res = optimize.minimize(
        lambda u: -tobit_loglik(u * scale, X, y) / data.n,
        theta / scale,
        jac=lambda u: -tobit_gradient(u * scale, X, y) * scale / data.n,
        method="BFGS",
        options={"gtol": 1e-9, "maxiter": max_iter},
    )
    theta = res.x * scale
    iterations = int(res.nit)
    for _ in range(50):
        g = tobit_gradient(theta, X, y)
        H = tobit_hessian(theta, X, y)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        ll = tobit_loglik(theta, X, y)
        t = 1.0
        while t > 1e-8 and tobit_loglik(theta + t * step, X, y) < ll - 1e-12 * abs(ll):
            t *= 0.5
        theta = theta + t * step
        iterations += 1
        if np.max(np.abs(step)) < 1e-12 * (1.0 + np.max(np.abs(theta))):
            break
    g = tobit_gradient(theta, X, y)
    H = tobit_hessian(theta, X, y)
    cov = np.linalg.inv(-H)
    # standardised gradient: score in units of its standard deviation
    g_std = g * np.sqrt(np.abs(np.diag(cov)))
    converged = bool(np.max(np.abs(g_std)) < gtol and np.all(np.diag(cov) > 0))
    beta, log_sigma = _split(theta)
    sigma = math.exp(log_sigma)
    fit = TobitFit(
        coefficients=beta,
        sigma=sigma,
        log_likelihood=tobit_loglik(theta, X, y),
        converged=converged,
        standard_errors=np.sqrt(np.diag(cov)[:-1]),
        sigma_se=sigma * math.sqrt(cov[-1, -1]),
        names=data.names,
        iterations=iterations,
        n_obs=data.n,
    )
    if not converged:
        raise ConvergenceError("Tobit optimisation did not converge", fit)
    return fit


def censored_mean(xb, sigma):
    """E[max(0, xb + sigma * eps)] for standard normal eps."""
    xb = np.asarray(xb, dtype=float)
    z = xb / sigma
    dens = np.exp(-0.5 * z * z - LOG_SQRT_2PI)
    return np.maximum(ndtr(z) * xb + sigma * dens, 0.0)


def tobit_predict(fit: TobitFit, design_row) -> float:
    return float(censored_mean(np.dot(design_row, fit.coefficients), fit.sigma))
