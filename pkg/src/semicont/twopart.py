"""Two-part model: logit for any use, Gamma log-link GLM for positive amounts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import DataError, Dataset
from .glm import Binomial, FittedGlm, Gamma, SingularDesignError, irls_fit


class PositivePartRankError(SingularDesignError):
    """The design restricted to positive responses lost full column rank."""


@dataclass(frozen=True)
class TwoPartFit:
    binary_part: FittedGlm
    positive_part: FittedGlm

    @property
    def combined_loglik(self) -> float:
        return self.binary_part.log_likelihood + self.positive_part.log_likelihood

    @property
    def log_likelihood(self) -> float:
        return self.combined_loglik

    def prob_positive(self, X) -> np.ndarray:
        return expit(np.asarray(X, dtype=float) @ self.binary_part.coefficients)

    def positive_mean(self, X) -> np.ndarray:
        return np.exp(np.asarray(X, dtype=float) @ self.positive_part.coefficients)

    def predict(self, X) -> np.ndarray:
        return self.prob_positive(X) * self.positive_mean(X)

    def to_dict(self) -> dict:
        return {
            "binary_part": self.binary_part.to_dict(),
            "positive_part": self.positive_part.to_dict(),
            "combined_loglik": float(self.combined_loglik),
        }


def fit_twopart(data: Dataset) -> TwoPartFit:
    y = data.response
    pos = y > 0
    if not (pos.any() and (~pos).any()):
        raise DataError("two-part model needs both zero and positive responses")
    positive_rows = data.subset(pos)
    # checked first: rank loss here usually means separation in the binary part too
    if np.linalg.matrix_rank(positive_rows.design) < data.k:
        raise PositivePartRankError("design restricted to positive responses is rank deficient")
    binary = irls_fit(data.with_response(pos.astype(float)), Binomial(), link="logit")
    positive = irls_fit(positive_rows, Gamma(), link="log")
    return TwoPartFit(binary_part=binary, positive_part=positive)


def predict_twopart(fit: TwoPartFit, design_row) -> float:
    return float(fit.predict(np.atleast_2d(design_row))[0])
