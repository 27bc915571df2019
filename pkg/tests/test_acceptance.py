"""Acceptance gate: one PASS/FAIL line per criterion, listed in the terminal summary.

Criteria 7 and 8 need the RAND HIE extract (``SEMICONT_RANDHIE_CSV`` or
``data/randhie.csv``) and are reported as SKIP when it is absent; criterion 9
stands in for them on simulated data.
"""
import itertools
import math
import os
import time

import numpy as np
import pytest

from semicont.data import RAND_COVARIATES, Dataset, SchemaConfig, load_csv, summarize
from semicont.density import TweedieParams, log_density, sample, total_mass
from semicont.evaluation import mean_variance_bins, rmse_over_splits
from semicont.glm import Gamma, Tweedie, irls_fit, tweedie_full_loglik, tweedie_score
from semicont.profile import profile_fit
from semicont.tobit import tobit_fit, tobit_gradient, tobit_loglik
from semicont.twopart import fit_twopart

import rand_reference as ref
from conftest import ACCEPTANCE_LINES, brute_force_logpdf, rand_hie_path, simulate_tweedie

GRID = list(itertools.product((0.5, 1.0, 5.0, 50.0, 200.0), (0.5, 1.0, 10.0), (1.1, 1.5, 1.719, 1.9)))


def record(number, ok, detail):
    ACCEPTANCE_LINES.append((number, "PASS" if ok else "FAIL", detail))
    assert ok, f"criterion {number}: {detail}"


def skip(number, reason):
    ACCEPTANCE_LINES.append((number, "SKIP", reason))
    pytest.skip(reason)


def rand_data():
    path = rand_hie_path()
    if path is None:
        return None
    response = os.environ.get("SEMICONT_RANDHIE_RESPONSE", "cost")
    return load_csv(path, SchemaConfig(response, RAND_COVARIATES))


def central_difference(f, x, rel=1e-5):
    g = np.empty_like(x)
    for j in range(x.size):
        h = rel * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_criterion_1_density_oracle():
    start = time.perf_counter()
    worst = 0.0
    for mu, phi, p in GRID:
        params = TweedieParams(mu, phi, p)
        for z in (0.01 * mu, 0.1 * mu, mu, 5 * mu, 20 * mu):
            # difference of log densities is the relative error of the density
            worst = max(worst, abs(log_density(z, params) - brute_force_logpdf(z, mu, phi, p)))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-8 and elapsed < 10,
           f"max relative error {worst:.2e} (tol 1e-8) over {len(GRID) * 5} points in {elapsed:.1f}s")


def test_criterion_2_normalization():
    start = time.perf_counter()
    worst = max(abs(total_mass(TweedieParams(mu, phi, p)) - 1.0) for mu, phi, p in GRID)
    elapsed = time.perf_counter() - start
    record(2, worst <= 1e-6 and elapsed < 30,
           f"max |mass - 1| {worst:.2e} (tol 1e-6) over {len(GRID)} settings in {elapsed:.1f}s")


def test_criterion_3_sampler_moments():
    start = time.perf_counter()
    x = sample(TweedieParams(1.0, 1.0, 1.5), 10 ** 6, seed=20240)
    zf, mean, var = float(np.mean(x == 0)), float(np.mean(x)), float(np.var(x))
    elapsed = time.perf_counter() - start
    ok = abs(zf - 0.1353) <= 0.001 and abs(mean - 1) <= 0.005 and abs(var - 1) <= 0.01 and elapsed < 10
    record(3, ok, f"zero fraction {zf:.4f}, mean {mean:.4f}, variance {var:.4f} in {elapsed:.1f}s")


def test_criterion_4_parameter_recovery():
    beta = np.array([1.0, 0.5, -0.3, 0.2])
    start = time.perf_counter()
    successes = 0
    for seed in range(100):
        data, _ = simulate_tweedie(20000, beta, 2.0, 1.5, seed=4000 + seed)
        res = profile_fit(data)
        fit = res.fit_at_p_hat
        ok_p = abs(res.p_hat - 1.5) <= 0.05
        ok_b = np.all(np.abs(fit.coefficients - beta) <= 3 * fit.standard_errors)
        successes += int(ok_p and ok_b)
    elapsed = time.perf_counter() - start
    record(4, successes >= 95, f"{successes}/100 seeded runs recovered p and beta (need 95) "
           f"in {elapsed / 60:.1f} min")


def test_criterion_5_gradients():
    data, _ = simulate_tweedie(200, [0.5, 0.3, -0.2], 1.4, 1.6, seed=55)
    X, y = data.design, data.response
    beta = np.array([0.45, 0.25, -0.15])
    g = tweedie_score(beta, X, y, 1.4, 1.6)
    num = central_difference(lambda b: tweedie_full_loglik(b, X, y, 1.4, 1.6), beta)
    err_tw = float(np.max(np.abs(g - num) / np.abs(num)))

    rng = np.random.default_rng(56)
    Xt = data.design
    yt = np.maximum(Xt @ np.array([0.3, 1.0, -0.8]) + rng.standard_normal(200), 0.0)
    theta = np.array([0.25, 0.9, -0.7, math.log(1.1)])
    gt = tobit_gradient(theta, Xt, yt)
    numt = central_difference(lambda t: tobit_loglik(t, Xt, yt), theta)
    err_tb = float(np.max(np.abs(gt - numt) / np.abs(numt)))
    record(5, err_tw <= 1e-4 and err_tb <= 1e-4,
           f"max relative gradient error Tweedie {err_tw:.1e}, Tobit {err_tb:.1e} (tol 1e-4)")


def test_criterion_6_special_cases():
    rng = np.random.default_rng(66)
    y = sample(TweedieParams(3.0, 2.0, 1.5), 500, seed=66)
    flat = Dataset.from_arrays(y, np.zeros((500, 0)))
    errs = [abs(irls_fit(flat, Tweedie(p)).coefficients[0] - math.log(y.mean())) for p in (1.2, 1.5, 1.8)]
    pos = Dataset.from_arrays(rng.gamma(2.0, 5.0, 500), np.zeros((500, 0)))
    errs.append(abs(irls_fit(pos, Gamma()).coefficients[0] - math.log(pos.response.mean())))
    err_int = max(errs)

    X = rng.standard_normal((300, 2))
    d = Dataset.from_arrays(np.zeros(300), X)
    yy = d.design @ np.array([100.0, 2.0, -1.5]) + rng.standard_normal(300)
    d = d.with_response(yy)
    ols = np.linalg.lstsq(d.design, yy, rcond=None)[0]
    err_ols = float(np.max(np.abs(tobit_fit(d).coefficients - ols) / np.abs(ols)))
    record(6, err_int <= 1e-10 and err_ols <= 1e-6,
           f"intercept-only |b0 - log ybar| {err_int:.1e} (tol 1e-10); "
           f"censor-free Tobit vs OLS {err_ols:.1e} (tol 1e-6)")


def _coef_failures(names, est, expected):
    bad = []
    for name, value in zip(names, est):
        target, se = expected[name]
        tol = min(0.02 * abs(target), 0.2 * se)
        if abs(value - target) > tol:
            bad.append(f"{name} {value:.3f} vs {target:.3f}")
    return bad


def test_criterion_7_rand_table():
    data = rand_data()
    if data is None:
        skip(7, "RAND HIE extract not present")
    start = time.perf_counter()
    s = summarize(data)
    problems = []
    if (s.n != ref.SUMMARY["n"] or round(s.zero_fraction, 3) != ref.SUMMARY["zero_fraction"]
            or round(s.mean, 2) != ref.SUMMARY["mean"] or s.max != ref.SUMMARY["max"]):
        problems.append(f"summary {s}")
    prof = profile_fit(data)
    tw = prof.fit_at_p_hat
    tp = fit_twopart(data)
    tb = tobit_fit(data)
    if abs(prof.p_hat - ref.POWER) > 0.01:
        problems.append(f"p {prof.p_hat:.4f}")
    for label, ll in (("tweedie", tw.log_likelihood), ("tobit", tb.log_likelihood),
                      ("binomial", tp.binary_part.log_likelihood),
                      ("gamma", tp.positive_part.log_likelihood)):
        if abs(ll - ref.LOGLIK[label]) > 0.005 * abs(ref.LOGLIK[label]):
            problems.append(f"{label} loglik {ll:.2f}")
    for label, fit in (("tweedie", tw), ("tobit", tb), ("binomial", tp.binary_part),
                       ("gamma", tp.positive_part)):
        problems += [f"{label}: {b}" for b in _coef_failures(fit.names, fit.coefficients,
                                                               ref.COEFFICIENTS[label])]
    elapsed = time.perf_counter() - start
    record(7, not problems and elapsed < 120,
           f"p {prof.p_hat:.4f}, {len(problems)} mismatches in {elapsed:.0f}s"
           + (": " + "; ".join(problems[:8]) if problems else ""))


def test_criterion_8_rand_prediction():
    data = rand_data()
    if data is None:
        skip(8, "RAND HIE extract not present")
    per = rmse_over_splits(data, 2801, 500, range(20))
    avg = {k: float(np.mean(v)) for k, v in per.items()}
    close = abs(avg["tweedie"] - avg["twopart"]) <= 0.02 * min(avg["tweedie"], avg["twopart"])
    below = avg["tweedie"] < avg["tobit"] and avg["twopart"] < avg["tobit"]
    near = all(abs(avg[k] - ref.TEST_RMSE[k]) <= 0.1 * ref.TEST_RMSE[k] for k in avg)
    record(8, close and below and near,
           "mean test RMSE over 20 splits: " + ", ".join(f"{k} {v:.2f}" for k, v in avg.items()))


def test_criterion_9_simulated_mean_variance():
    data, _ = simulate_tweedie(20000, [3.0, 1.0, -0.5], 2.0, 1.719, seed=1719)
    fit = irls_fit(data, Tweedie(1.719))
    slope = mean_variance_bins(data, fit).slope()
    record(9, abs(slope - 1.719) <= 0.15, f"log-variance on log-mean slope {slope:.3f} (1.719 +/- 0.15)")
