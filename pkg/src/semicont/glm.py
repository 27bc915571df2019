"""
Generalized linear models fitted by iteratively reweighted least squares.

Families: Tweedie with a fixed power in (1, 2), Gamma and Binomial.  Links:
log and logit.  Standard errors come from the expected information at the
final IRLS weights, scaled by the reported dispersion.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize, stats
from scipy.special import expit, gammaln, logit as _logit

from .data import DataError, Dataset
from .density import tweedie_logpdf, tweedie_phi_mle

logger = logging.getLogger(__name__)


class SingularDesignError(np.linalg.LinAlgError):
    """The weighted cross-product matrix is rank deficient."""


class ConvergenceError(RuntimeError):
    """IRLS hit its iteration limit; ``fit`` carries the last iterate."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


# --------------------------------------------------------------------------
# links


class LogLink:
    name = "log"

    def link(self, mu):
        return np.log(mu)

    def inverse(self, eta):
        return np.exp(np.clip(eta, -700, 700))

    def mu_eta(self, eta):
        return np.exp(np.clip(eta, -700, 700))


class LogitLink:
    name = "logit"

    def link(self, mu):
        return _logit(mu)

    def inverse(self, eta):
        return expit(eta)

    def mu_eta(self, eta):
        m = expit(eta)
        return np.maximum(m * (1.0 - m), np.finfo(float).tiny)


LINKS = {"log": LogLink, "logit": LogitLink}


def get_link(link):
    if isinstance(link, str):
        try:
            return LINKS[link]()
        except KeyError:
            raise ValueError(f"unknown link {link!r}") from None
    return link


# --------------------------------------------------------------------------
# families


class Family:
    name = "family"
    default_link = "log"
    fixed_dispersion = False

    def variance(self, mu):
        raise NotImplementedError

    def unit_deviance(self, y, mu):
        raise NotImplementedError

    def deviance(self, y, mu):
        return float(np.sum(self.unit_deviance(y, mu)))

    def check_response(self, y):
        pass

    def start(self, y):
        # shifted so the log link stays finite at zeros
        return y + 0.1 * np.mean(y)

    def loglik(self, y, mu, phi):
        raise NotImplementedError

    def phi_mle(self, y, mu, start):
        return 1.0

    def describe(self):
        return {"name": self.name}


class Tweedie(Family):
    name = "tweedie"

    def __init__(self, p: float):
        if not 1.0 < p < 2.0:
            raise ValueError(f"Tweedie power must lie in (1, 2), got {p!r}")
        self.p = float(p)

    def __repr__(self):
        return f"Tweedie(p={self.p!r})"

    def variance(self, mu):
        return mu ** self.p

    def unit_deviance(self, y, mu):
        p = self.p
        return 2.0 * (np.power(y, 2.0 - p) / ((1.0 - p) * (2.0 - p))
                      - y * mu ** (1.0 - p) / (1.0 - p)
                      + mu ** (2.0 - p) / (2.0 - p))

    def check_response(self, y):
        if np.any(y < 0):
            raise DataError("Tweedie response must be non-negative")

    def loglik(self, y, mu, phi):
        return float(np.sum(tweedie_logpdf(y, mu, phi, self.p)))

    def phi_mle(self, y, mu, start):
        return tweedie_phi_mle(y, mu, self.p, start=start)[0]

    def natural_parameter(self, mu):
        return mu ** (1.0 - self.p) / (1.0 - self.p)

    def cumulant(self, mu):
        return mu ** (2.0 - self.p) / (2.0 - self.p)

    def describe(self):
        return {"name": self.name, "p": self.p}


class Gamma(Family):
    name = "gamma"

    def variance(self, mu):
        return mu ** 2

    def unit_deviance(self, y, mu):
        return 2.0 * (-np.log(y / mu) + (y - mu) / mu)

    def check_response(self, y):
        if np.any(y <= 0):
            raise DataError("Gamma response must be strictly positive")

    def start(self, y):
        return y.astype(float).copy()

    def loglik(self, y, mu, phi):
        shape = 1.0 / phi
        return float(np.sum(stats.gamma.logpdf(y, shape, scale=mu * phi)))

    def phi_mle(self, y, mu, start):
        # maximise over the shape nu = 1/phi, bracketed around the Pearson value
        def neg(log_nu):
            nu = math.exp(log_nu)
            r = y / mu
            return -float(np.sum(nu * np.log(nu * r) - nu * r - np.log(y) - gammaln(nu)))

        if not (math.isfinite(start) and start > 0):
            raise FloatingPointError("zero dispersion estimate: the mean reproduces the data exactly")
        centre = -math.log(start)
        res = optimize.minimize_scalar(neg, bounds=(centre - 8.0, centre + 8.0), method="bounded",
                                       options={"xatol": 1e-10})
        return math.exp(-res.x)


class Binomial(Family):
    name = "binomial"
    default_link = "logit"
    fixed_dispersion = True

    def variance(self, mu):
        return mu * (1.0 - mu)

    def unit_deviance(self, y, mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(y > 0, y * np.log(y / mu), 0.0)
            b = np.where(y < 1, (1.0 - y) * np.log((1.0 - y) / (1.0 - mu)), 0.0)
        return 2.0 * (a + b)

    def check_response(self, y):
        if not np.all((y == 0) | (y == 1)):
            raise DataError("Binomial response must be 0/1")

    def start(self, y):
        return (y + 0.5) / 2.0

    def loglik(self, y, mu, phi=1.0):
        return float(np.sum(y * np.log(mu) + (1.0 - y) * np.log1p(-mu)))


FAMILIES = {"tweedie": Tweedie, "gamma": Gamma, "binomial": Binomial}


# --------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FittedGlm:
    coefficients: np.ndarray
    cov_unscaled: np.ndarray
    dispersion: float
    log_likelihood: float
    iterations: int
    converged: bool
    family: Family = field(repr=False)
    link: object = field(repr=False)
    names: tuple[str, ...] = ()
    deviance: float = math.nan
    pearson_dispersion: float = math.nan
    phi_mle: float = math.nan
    dispersion_method: str = "pearson"
    n_obs: int = 0

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_unscaled) * self.dispersion)

    @property
    def covariance(self) -> np.ndarray:
        return self.cov_unscaled * self.dispersion

    def linear_predictor(self, X, offset=None):
        eta = np.asarray(X, dtype=float) @ self.coefficients
        return eta if offset is None else eta + offset

    def predict(self, X, offset=None):
        return self.link.inverse(self.linear_predictor(X, offset))

    def with_dispersion(self, method: str) -> "FittedGlm":
        """Copy whose standard errors are scaled by the named dispersion."""
        if self.family.fixed_dispersion:
            return self
        value = {"pearson": self.pearson_dispersion, "mle": self.phi_mle}[method]
        return replace(self, dispersion=value, dispersion_method=method)

    def to_dict(self) -> dict:
        return {
            "family": self.family.describe(),
            "link": self.link.name,
            "coefficients": dict(zip(self.names, map(float, self.coefficients))),
            "standard_errors": dict(zip(self.names, map(float, self.standard_errors))),
            "dispersion": float(self.dispersion),
            "dispersion_method": self.dispersion_method,
            "pearson_dispersion": float(self.pearson_dispersion),
            "phi_mle": float(self.phi_mle),
            "log_likelihood": float(self.log_likelihood),
            "deviance": float(self.deviance),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "n_obs": int(self.n_obs),
        }


def _wls(X, z, w, rank_tol=1e-10):
    """Weighted least squares by pivoted QR; returns (beta, unscaled covariance)."""
    sw = np.sqrt(w)
    A = X * sw[:, None]
    Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0 or np.any(diag < rank_tol * diag[0]):
        rank = int(np.sum(diag >= rank_tol * (diag[0] if diag.size else 0.0)))
        raise SingularDesignError(f"design is rank deficient (rank {rank} < {X.shape[1]})")
    coef_p = linalg.solve_triangular(R, Q.T @ (sw * z))
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]))
    cov_p = Rinv @ Rinv.T
    beta = np.empty_like(coef_p)
    beta[piv] = coef_p
    cov = np.empty_like(cov_p)
    cov[np.ix_(piv, piv)] = cov_p
    return beta, cov


def pearson_statistic(family, y, mu):
    return float(np.sum((y - mu) ** 2 / family.variance(mu)))


def irls_fit(data: Dataset, family: Family, link=None, offset=None, tol=1e-10,
             max_iter=100, dispersion="pearson", score_tol=1e-8) -> FittedGlm:
    """Fit a GLM by IRLS.

    Converges when the relative change in deviance drops below ``tol`` and
    the quasi-score, in units of its standard deviation, is below
    ``score_tol`` (non-canonical links converge only linearly, so the
    deviance alone stops early).  The
    returned dispersion (and the standard errors) use the Pearson estimate
    unless ``dispersion="mle"``.  The log-likelihood is always evaluated at
    the maximum-likelihood dispersion.
    """
    if dispersion not in ("pearson", "mle"):
        raise ValueError("dispersion must be 'pearson' or 'mle'")
    link = get_link(link or family.default_link)
    y = data.response
    X = data.design
    n, k = X.shape
    family.check_response(y)
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)

    mu = family.start(y)
    eta = link.link(mu)
    dev_old = family.deviance(y, mu)
    beta = np.zeros(k)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d = link.mu_eta(eta)
        z = eta - off + (y - mu) / d
        w = d * d / family.variance(mu)
        beta_new, cov = _wls(X, z, w)
        score = X.T @ ((y - mu) * d / family.variance(mu))
        score_small = np.max(np.abs(score) * np.sqrt(np.diag(cov))) < score_tol
        eta_new = X @ beta_new + off
        mu_new = link.inverse(eta_new)
        dev = family.deviance(y, mu_new)
        halvings = 0
        # step halving keeps the iterate inside the valid mean range
        while not np.isfinite(dev) and halvings < 30:
            beta_new = 0.5 * (beta_new + beta)
            eta_new = X @ beta_new + off
            mu_new = link.inverse(eta_new)
            dev = family.deviance(y, mu_new)
            halvings += 1
        beta, eta, mu = beta_new, eta_new, mu_new
        if abs(dev - dev_old) / (abs(dev) + 0.1) < tol and score_small:
            converged = True
            break
        dev_old = dev

    d = link.mu_eta(eta)
    w = d * d / family.variance(mu)
    _, cov = _wls(X, np.zeros(n), w)
    pearson = pearson_statistic(family, y, mu) / (n - k)
    if family.fixed_dispersion:
        phi_hat = 1.0
        pearson_disp = pearson
    else:
        pearson_disp = pearson
        try:
            phi_hat = family.phi_mle(y, mu, pearson)
        except FloatingPointError as exc:
            # no usable likelihood dispersion; the coefficients are unaffected
            if dispersion == "mle":
                raise
            logger.warning("maximum-likelihood dispersion unavailable: %s", exc)
            phi_hat = math.nan
    loglik = family.loglik(y, mu, phi_hat) if math.isfinite(phi_hat) else math.nan
    if family.fixed_dispersion:
        disp = 1.0
    else:
        disp = pearson_disp if dispersion == "pearson" else phi_hat
    fit = FittedGlm(
        coefficients=beta, cov_unscaled=cov, dispersion=disp, log_likelihood=loglik,
        iterations=it, converged=converged, family=family, link=link, names=data.names,
        deviance=float(family.deviance(y, mu)), pearson_dispersion=pearson_disp,
        phi_mle=phi_hat, dispersion_method="fixed" if family.fixed_dispersion else dispersion,
        n_obs=n,
    )
    if not converged:
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations", fit)
    return fit


def pearson_dispersion(fit: FittedGlm, data: Dataset) -> float:
    mu = fit.predict(data.design)
    return pearson_statistic(fit.family, data.response, mu) / (data.n - data.k)


def model_loglik(fit: FittedGlm, data: Dataset) -> float:
    """Exact log-likelihood of ``data`` at the fitted mean and ML dispersion."""
    mu = fit.predict(data.design)
    phi = 1.0 if fit.family.fixed_dispersion else fit.phi_mle
    return fit.family.loglik(data.response, mu, phi)


def quasi_score(fit: FittedGlm, data: Dataset) -> np.ndarray:
    """Quasi-score at the fitted coefficients, standardised by its information."""
    eta = fit.linear_predictor(data.design)
    mu = fit.link.inverse(eta)
    d = fit.link.mu_eta(eta)
    V = fit.family.variance(mu)
    score = data.design.T @ ((data.response - mu) * d / V)
    info = np.diag(np.linalg.inv(fit.cov_unscaled))
    return score / np.sqrt(info)


# --------------------------------------------------------------------------
# full Tweedie likelihood in the coefficients (log link)


def tweedie_full_loglik(beta, X, y, phi, p) -> float:
    mu = np.exp(X @ beta)
    return float(np.sum(tweedie_logpdf(y, mu, phi, p)))


def tweedie_score(beta, X, y, phi, p) -> np.ndarray:
    """Gradient of :func:`tweedie_full_loglik` in ``beta`` under the log link.

    d/d mu of (y*theta - kappa)/phi is (y - mu) * mu**-p / phi, and
    d mu / d eta = mu.
    """
    mu = np.exp(X @ beta)
    return X.T @ ((y - mu) * mu ** (1.0 - p)) / phi
