import os
from pathlib import Path

import numpy as np
import pytest
from scipy import stats
from scipy.special import logsumexp

from semicont.data import Dataset, SchemaConfig, load_csv
from semicont.density import compound_arrays, sample_arrays

ROOT = Path(__file__).resolve().parents[1]

# (criterion, status, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES = []


def brute_force_logpdf(z, mu, phi, p, m_max=500):
    """Poisson-weighted Gamma mixture, summed with log-sum-exp over m = 1..m_max.

    The cut-off is doubled while the last term is still within 50 log units
    of the largest, so the sum is complete even where the Poisson mean is
    large.
    """
    lam, alpha, beta = compound_arrays(mu, phi, p)
    while True:
        m = np.arange(1, m_max + 1)
        terms = stats.poisson.logpmf(m, lam) + stats.gamma.logpdf(z, m * alpha, scale=beta)
        if terms[-1] < terms.max() - 50:
            return float(logsumexp(terms))
        m_max *= 2


def simulate_tweedie(n, beta, phi, p, seed, scale=1.0):
    """Dataset with standard normal covariates and Tweedie responses (log link)."""
    rng = np.random.default_rng(seed)
    beta = np.asarray(beta, dtype=float)
    X = scale * rng.standard_normal((n, beta.size - 1))
    data = Dataset.from_arrays(np.zeros(n), X)
    mu = np.exp(data.design @ beta)
    return data.with_response(sample_arrays(mu, phi, p, rng)), mu


def rand_hie_path():
    """Location of the RAND HIE extract, if one has been provided."""
    candidates = [os.environ.get("SEMICONT_RANDHIE_CSV"), ROOT / "data" / "randhie.csv"]
    for c in candidates:
        if c and Path(c).is_file():
            return Path(c)
    return None


@pytest.fixture(scope="session")
def rand_hie():
    path = rand_hie_path()
    if path is None:
        pytest.skip("RAND HIE extract not available (set SEMICONT_RANDHIE_CSV)")
    response = os.environ.get("SEMICONT_RANDHIE_RESPONSE", "cost")
    return load_csv(path, SchemaConfig(response_column=response))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
