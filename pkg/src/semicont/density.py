"""
Tweedie compound Poisson-Gamma distribution for power parameters 1 < p < 2.

A Tweedie variable with mean ``mu``, dispersion ``phi`` and power ``p`` is a
Poisson(lam) sum of Gamma(alpha, beta) variables (shape-scale), where

    lam   = mu**(2 - p) / (phi * (2 - p))
    alpha = (2 - p) / (p - 1)
    beta  = phi * (p - 1) * mu**(p - 1)

The density on z > 0 has no closed form.  It is evaluated as the series

    f(z) = exp(-lam - z / beta) / z * sum_{m >= 1} exp(m * c - lgamma(m + 1) - lgamma(m * alpha))

with ``c = log(lam) + alpha * log(z / beta)``, summed in log space around its
largest term and truncated once terms drop ``SERIES_DROP`` log-units below it.
"""
from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

SERIES_DROP = 37.0
# padded block size (rows x terms) for the vectorised series sum
_BLOCK = 2_000_000
_TABLE_MAX = 2_000_000
# widest window per observation; beyond it the dispersion is too small for the series
SERIES_MAX_TERMS = 2_000_000


@dataclass(frozen=True)
class CompoundRepresentation:
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("lam", "alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    def to_tweedie(self) -> "TweedieParams":
        """Invert the mapping back to (mu, phi, p)."""
        p = (self.alpha + 2.0) / (self.alpha + 1.0)
        mu = self.lam * self.alpha * self.beta
        phi = self.beta / ((p - 1.0) * mu ** (p - 1.0))
        return TweedieParams(mu=mu, phi=phi, p=p)

    @property
    def mean(self) -> float:
        return self.lam * self.alpha * self.beta

    @property
    def variance(self) -> float:
        return self.lam * self.alpha * self.beta ** 2 * (1.0 + self.alpha)


@dataclass(frozen=True)
class TweedieParams:
    mu: float
    phi: float
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be positive and finite, got {self.mu!r}")
        if not (np.isfinite(self.phi) and self.phi > 0):
            raise ValueError(f"phi must be positive and finite, got {self.phi!r}")
        if not 1.0 < self.p < 2.0:
            raise ValueError(f"p must lie in (1, 2), got {self.p!r}")

    @property
    def variance(self) -> float:
        return self.phi * self.mu ** self.p


def _check_power(p):
    if not 1.0 < p < 2.0:
        raise ValueError(f"p must lie in (1, 2), got {p!r}")


def compound_arrays(mu, phi, p):
    """Vectorised (lam, alpha, beta) for array-valued ``mu``."""
    mu = np.asarray(mu, dtype=float)
    lam = mu ** (2.0 - p) / (phi * (2.0 - p))
    alpha = (2.0 - p) / (p - 1.0)
    beta = phi * (p - 1.0) * mu ** (p - 1.0)
    return lam, alpha, beta


def to_compound(params: TweedieParams) -> CompoundRepresentation:
    lam, alpha, beta = compound_arrays(params.mu, params.phi, params.p)
    return CompoundRepresentation(lam=float(lam), alpha=float(alpha), beta=float(beta))


def zero_probability(params: TweedieParams) -> float:
    lam, _, _ = compound_arrays(params.mu, params.phi, params.p)
    return float(np.exp(-lam))


def _series_terms(m, c, alpha):
    return m * c - gammaln(m + 1.0) - gammaln(m * alpha)


def _find_edge(t, m0, thresh, cap):
    """Largest offset k <= |cap| with t(m0 +/- k) >= thresh.

    The sign of ``cap`` picks the direction.  Relies on the term sequence being concave in m, so the crossing is unique
    on each side of the mode.
    """
    sign = np.where(cap < 0, -1.0, 1.0)
    cap = np.abs(cap)
    good = np.zeros(m0.shape)
    bad = np.full(m0.shape, np.inf)
    step = np.ones(m0.shape)
    active = cap > 0
    while active.any():
        k = np.minimum(step, cap)
        above = t(m0 + sign * k) >= thresh
        good = np.where(active & above, k, good)
        bad = np.where(active & ~above, k, bad)
        active = active & above & (k < cap)
        step = step * 2.0
    open_ = np.isfinite(bad)
    while True:
        gap = open_ & (bad - good > 1)
        if not gap.any():
            break
        mid = np.floor((good + bad) / 2.0)
        above = t(m0 + sign * mid) >= thresh
        good = np.where(gap & above, mid, good)
        bad = np.where(gap & ~above, mid, bad)
    return good


def _check_width(width, phi):
    if width > SERIES_MAX_TERMS:
        raise FloatingPointError(f"series needs {width:.3g} terms (dispersion down to "
                                 f"{float(np.min(phi)):.3g}); too small a dispersion to evaluate")


def log_series(z, phi, p, moments=False):
    """log of sum_{m>=1} W_m for positive ``z``.

    The sum does not depend on the mean; ``c`` is the per-observation slope
    of the term exponent in m.  With ``moments`` the mean and variance of m
    under the normalised term weights are returned as well (they give the
    derivatives of the log sum in log(phi)).
    """
    z = np.asarray(z, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), z.shape)
    alpha = (2.0 - p) / (p - 1.0)
    # log(lam) + alpha*log(z/beta), with mu cancelling
    c = (alpha * np.log(z) - np.log(2.0 - p) - (1.0 + alpha) * np.log(phi)
         - alpha * np.log(p - 1.0))
    m0 = np.maximum(1.0, np.round(z ** (2.0 - p) / (phi * (2.0 - p))))
    if z.size == 0:
        return (np.zeros(0),) * 3 if moments else np.zeros(0)

    def terms_at(m, cc=c):
        return _series_terms(m, cc, alpha)

    # near its mode the term sequence is roughly Gaussian in m with variance
    # m0 / (1 + alpha); start from a generous window and verify the edges
    half = np.ceil(10.0 * np.sqrt(m0 / (1.0 + alpha)) + 10.0)
    _check_width(2.0 * half.max() + 1.0, phi)
    lo = np.maximum(1.0, m0 - half)
    hi = m0 + half
    thresh = terms_at(m0) - SERIES_DROP
    bad = (terms_at(hi + 1.0) >= thresh) | ((lo > 1.0) & (terms_at(np.maximum(lo - 1.0, 1.0)) >= thresh))
    if bad.any():
        cb, mb, tb = c[bad], m0[bad], thresh[bad]

        def terms_bad(m):
            return _series_terms(m, cb, alpha)

        lo[bad] = mb - _find_edge(terms_bad, mb, tb, -(mb - 1.0))
        hi[bad] = mb + _find_edge(terms_bad, mb, tb, np.full(mb.shape, np.inf))
    _check_width((hi - lo + 1).max(), phi)
    width = (hi - lo + 1).astype(np.int64)

    # rows are padded to the widest window in their block; the extra columns
    # are genuine (negligible) series terms, so no masking is needed
    order = np.argsort(width, kind="stable")
    w_sorted = width[order]
    top = int((lo + w_sorted[-1]).max())
    table = None
    if top <= _TABLE_MAX:
        jj = np.arange(1, top + 1, dtype=float)
        table = np.concatenate([[np.inf], gammaln(jj + 1.0) + gammaln(jj * alpha)])

    out = np.empty(z.shape)
    m_mean = np.empty(z.shape) if moments else None
    m_var = np.empty(z.shape) if moments else None
    n = z.size
    start = 0
    while start < n:
        rows = np.arange(1, n - start + 1)
        over = w_sorted[start:] * rows > _BLOCK
        stop = start + (int(np.argmax(over)) if over.any() else n - start)
        stop = max(stop, start + 1)
        idx = order[start:stop]
        m = lo[idx, None] + np.arange(w_sorted[stop - 1], dtype=float)[None, :]
        if table is not None:
            g = table[m.astype(np.int64)]
        else:
            g = gammaln(m + 1.0) + gammaln(m * alpha)
        terms = m * c[idx, None] - g
        peak = terms.max(axis=1)
        w = np.exp(terms - peak[:, None])
        total = w.sum(axis=1)
        out[idx] = peak + np.log(total)
        if moments:
            d = m - m0[idx, None]
            e1 = (w * d).sum(axis=1) / total
            e2 = (w * d * d).sum(axis=1) / total
            m_mean[idx] = m0[idx] + e1
            m_var[idx] = e2 - e1 * e1
        start = stop
    if moments:
        return out, m_mean, m_var
    return out


def tweedie_logpdf(y, mu, phi, p):
    """Elementwise log density (log point mass at y == 0)."""
    _check_power(p)
    y = np.asarray(y, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), y.shape)
    phi_b = np.broadcast_to(np.asarray(phi, dtype=float), y.shape)
    if np.any(~np.isfinite(y)):
        raise ValueError("y must be finite")
    if np.any(y < 0):
        raise ValueError("y must be non-negative")
    lam, alpha, beta = compound_arrays(mu, phi_b, p)
    out = -lam.copy()
    pos = y > 0
    if np.any(pos):
        yp = y[pos]
        with np.errstate(divide="ignore"):
            out[pos] = (-lam[pos] - yp / beta[pos] - np.log(yp)
                        + log_series(yp, phi_b[pos], p))
    return out


def tweedie_loglik(y, mu, phi, p) -> float:
    return float(np.sum(tweedie_logpdf(y, mu, phi, p)))


def _phi_profile(y, mu, p, log_phi):
    """Log-likelihood and its first two derivatives in log(phi)."""
    phi = math.exp(log_phi)
    lam, alpha, beta = compound_arrays(mu, phi, p)
    pos = y > 0
    rate = lam.copy()
    rate[pos] += y[pos] / beta[pos]
    ll = -rate.sum()
    d1 = rate.sum()
    d2 = -rate.sum()
    if pos.any():
        yp = y[pos]
        logw, m_mean, m_var = log_series(yp, phi, p, moments=True)
        ll += np.sum(logw - np.log(yp))
        d1 -= (1.0 + alpha) * m_mean.sum()
        d2 += (1.0 + alpha) ** 2 * m_var.sum()
    return float(ll), float(d1), float(d2)


def tweedie_phi_mle(y, mu, p, start=None, tol=1e-10, max_iter=100):
    """Maximise the series log-likelihood in phi with mean ``mu`` held fixed.

    Safeguarded Newton on log(phi): the bracket is grown until the derivative
    changes sign and every Newton step that leaves it is replaced by
    bisection.  Returns ``(phi, loglik)``.
    """
    _check_power(p)
    y = np.asarray(y, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), y.shape)
    if start is None:
        # Pearson estimate
        start = float(np.sum((y - mu) ** 2 / mu ** p) / max(1, y.size - 1))
    if not (math.isfinite(start) and start > 0):
        raise FloatingPointError("zero dispersion estimate: the mean reproduces the data exactly")
    s = math.log(start)
    ll, d1, d2 = _phi_profile(y, mu, p, s)
    lo, hi = -math.inf, math.inf
    for _ in range(max_iter):
        if d1 > 0:
            lo = s
        else:
            hi = s
        if d2 < 0:
            step = -d1 / d2
        else:
            step = math.copysign(1.0, d1)
        step = max(-2.0, min(2.0, step))
        s_new = s + step
        if not lo < s_new < hi:
            if math.isfinite(lo) and math.isfinite(hi):
                s_new = 0.5 * (lo + hi)
            else:
                s_new = s + math.copysign(2.0, d1)
        if abs(s_new - s) < tol:
            break
        s = s_new
        ll, d1, d2 = _phi_profile(y, mu, p, s)
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo < tol:
            break
    return math.exp(s), ll


def log_density(z, params: TweedieParams) -> float:
    z = float(z)
    if not np.isfinite(z):
        raise ValueError("z must be finite")
    if z < 0:
        raise ValueError("z must be non-negative")
    return float(tweedie_logpdf(np.array([z]), params.mu, params.phi, params.p)[0])


def _log_series_scalar(z, phi, p):
    """Pure-Python walk of the series for one point; the quadrature hot path."""
    alpha = (2.0 - p) / (p - 1.0)
    c = (alpha * math.log(z) - math.log(2.0 - p) - (1.0 + alpha) * math.log(phi)
         - alpha * math.log(p - 1.0))
    m0 = max(1.0, round(z ** (2.0 - p) / (phi * (2.0 - p))))
    if m0 > 1e4:
        return float(log_series(np.array([z]), phi, p)[0])
    lg = math.lgamma
    t0 = m0 * c - lg(m0 + 1.0) - lg(m0 * alpha)
    total = 1.0
    m = m0 + 1.0
    while True:
        d = m * c - lg(m + 1.0) - lg(m * alpha) - t0
        if d < -SERIES_DROP:
            break
        total += math.exp(d)
        m += 1.0
    m = m0 - 1.0
    while m >= 1.0:
        d = m * c - lg(m + 1.0) - lg(m * alpha) - t0
        if d < -SERIES_DROP:
            break
        total += math.exp(d)
        m -= 1.0
    return t0 + math.log(total)


def _pdf_scalar(params, log=False):
    mu, phi, p = params.mu, params.phi, params.p
    lam, _, beta = (float(v) for v in compound_arrays(mu, phi, p))

    def logf(t):
        return -lam - t / beta - math.log(t) + _log_series_scalar(t, phi, p)

    def f(t):
        return math.exp(logf(t)) if t > 0 else 0.0
    return logf if log else f


def _breakpoints(params, upper):
    mu = params.mu
    sd = math.sqrt(params.variance)
    pts = [mu + k * sd for k in (-3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 5, 8, 12, 20, 30, 45)]
    scale = min(mu, upper)
    pts += [scale * 10.0 ** -k for k in (1, 2, 4, 6)]
    return sorted(x for x in set(pts) if 0 < x < upper)


def _continuous_mass(params, upper):
    f = _pdf_scalar(params)
    logf = _pdf_scalar(params, log=True)
    alpha = (2.0 - params.p) / (params.p - 1.0)
    edges = [0.0] + _breakpoints(params, upper) + [upper]

    # near zero f(t) ~ t**(alpha - 1) * (series in t**alpha); with u = t**alpha
    # the first piece becomes a power series in u
    def in_u(u):
        if u <= 0:
            return 0.0
        t = u ** (1.0 / alpha)
        if t == 0.0:
            return 0.0
        return math.exp(logf(t) + (1.0 - alpha) * math.log(t)) / alpha

    total, _ = integrate.quad(in_u, 0.0, edges[1] ** alpha, epsabs=1e-13, epsrel=1e-10, limit=200)
    for a, b in zip(edges[1:-1], edges[2:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-10, limit=200)
        total += val
    return total


def cdf(z, params: TweedieParams) -> float:
    """Pr(Z <= z): the zero mass plus adaptive quadrature of the density."""
    z = float(z)
    if not z >= 0:
        raise ValueError("z must be non-negative")
    p0 = zero_probability(params)
    if z == 0:
        return p0
    return min(1.0, p0 + _continuous_mass(params, z))


def total_mass(params: TweedieParams) -> float:
    """Zero mass plus the density integrated over (0, inf)."""
    upper = params.mu + 60.0 * np.sqrt(params.variance)
    body = _continuous_mass(params, upper)
    tail, _ = integrate.quad(_pdf_scalar(params), upper, np.inf, epsabs=1e-14, limit=200)
    return zero_probability(params) + body + tail


def quantile(q, params: TweedieParams) -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    p0 = zero_probability(params)
    if q <= p0:
        return 0.0
    sd = np.sqrt(params.variance)
    hi = params.mu + sd
    while cdf(hi, params) < q:
        hi = hi * 2.0
    return optimize.brentq(lambda z: cdf(z, params) - q, 0.0, hi,
                           xtol=1e-300, rtol=1e-10, maxiter=500)


def sample_arrays(mu, phi, p, rng):
    """One compound Poisson-Gamma draw per entry of ``mu``."""
    lam, alpha, beta = compound_arrays(mu, phi, p)
    counts = rng.poisson(lam)
    # sum of M iid Gamma(alpha, beta) is Gamma(M * alpha, beta); shape 0 gives 0
    return rng.gamma(counts * alpha, beta)


def sample(params: TweedieParams, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return sample_arrays(np.full(n, params.mu), params.phi, params.p, rng)
