"""Profile-likelihood estimation of the Tweedie power parameter."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, Dataset
from .glm import ConvergenceError, FittedGlm, SingularDesignError, Tweedie, irls_fit

logger = logging.getLogger(__name__)

DEFAULT_GRID = tuple(round(1.05 + 0.05 * i, 2) for i in range(19))
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class BoundaryWarning(UserWarning):
    """The profile maximum sits on the edge of the searched power range."""


@dataclass(frozen=True)
class ProfileResult:
    p_grid: tuple[float, ...]
    loglik_at: tuple[float, ...]
    p_hat: float
    phi_hat: float
    fit_at_p_hat: FittedGlm
    evaluations: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "phi_hat": self.phi_hat,
            "p_grid": list(self.p_grid),
            "loglik_at": list(self.loglik_at),
            "evaluations": {repr(p): ll for p, ll in sorted(self.evaluations.items())},
            "notes": list(self.notes),
        }


def profile_fit(data: Dataset, link: str = "log", grid=DEFAULT_GRID, tol: float = 1e-3) -> ProfileResult:
    """Maximise the Tweedie log-likelihood over the power parameter.

    For every candidate ``p`` the coefficients come from IRLS and the
    dispersion from a one-dimensional maximisation of the series likelihood.
    A coarse scan over ``grid`` is refined by golden-section search between
    the neighbours of the best grid point until the bracket is narrower than
    ``tol``.
    """
    y = data.response
    if not (np.any(y == 0) and np.any(y > 0)):
        raise DataError("power profiling needs both zero and positive responses")
    fits: dict[float, FittedGlm] = {}
    lls: dict[float, float] = {}
    notes: list[str] = []

    def evaluate(p):
        p = float(p)
        if p in lls:
            return lls[p]
        try:
            fit = irls_fit(data, Tweedie(p), link=link, dispersion="mle")
        except (ConvergenceError, SingularDesignError, FloatingPointError) as exc:
            msg = f"p={p!r} skipped: {exc}"
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            notes.append(msg)
            lls[p] = -math.inf
            return lls[p]
        fits[p] = fit
        lls[p] = fit.log_likelihood
        logger.debug("p=%.4f loglik=%.4f phi=%.4f", p, fit.log_likelihood, fit.phi_mle)
        return lls[p]

    grid = tuple(float(g) for g in grid)
    grid_ll = tuple(evaluate(p) for p in grid)
    if not fits:
        raise ConvergenceError("no grid point could be fitted")
    i = int(np.argmax(grid_ll))  # first maximum, i.e. the smaller p on ties
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = evaluate(c), evaluate(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = evaluate(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = evaluate(d)

    ps = sorted(lls)
    best = max(ps, key=lambda p: (lls[p], -p))
    if best <= grid[0] or best >= grid[-1]:
        msg = f"profile maximum at the search boundary p={best!r}"
        warnings.warn(msg, BoundaryWarning, stacklevel=2)
        notes.append(msg)
    fit = fits[best]
    return ProfileResult(
        p_grid=grid,
        loglik_at=grid_ll,
        p_hat=best,
        phi_hat=fit.phi_mle,
        fit_at_p_hat=fit,
        evaluations={p: lls[p] for p in ps},
        notes=tuple(notes),
    )
