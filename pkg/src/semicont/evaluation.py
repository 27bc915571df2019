"""
Model comparison: train/test splits, RMSE, Q-Q tables, mean-variance bins
and the report that collects them.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, DatasetSummary, summarize
from .density import sample_arrays
from .glm import FittedGlm, Gamma, Tweedie, irls_fit
from .profile import profile_fit
from .tobit import TobitFit, tobit_fit
from .twopart import TwoPartFit, fit_twopart

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = tuple(round(0.01 * i, 2) for i in range(1, 100))
REFERENCE_POWERS = (1.0, 1.5, 1.719, 2.0)
MODEL_ORDER = ("tweedie", "twopart", "tobit")


@dataclass(frozen=True)
class SplitSpec:
    train_n: int
    test_n: int
    seed: int

    def __post_init__(self):
        if self.train_n < 1 or self.test_n < 1:
            raise ValueError("train and test sizes must both be at least 1")


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    if spec.train_n + spec.test_n != data.n:
        raise ValueError(f"split sizes {spec.train_n}+{spec.test_n} do not add up to n={data.n}")
    perm = np.random.default_rng(spec.seed).permutation(data.n)
    return data.subset(np.sort(perm[:spec.train_n])), data.subset(np.sort(perm[spec.train_n:]))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[:spec.train_n]), np.sort(perm[spec.train_n:])


def rmse(predictions, truths) -> float:
    a = np.asarray(predictions, dtype=float)
    b = np.asarray(truths, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError("predictions and truths must be equal-length, non-empty vectors")
    return float(np.sqrt(np.mean((a - b) ** 2)))


# --------------------------------------------------------------------------
# fitted-model adapters


def predict_mean(model, X) -> np.ndarray:
    """Unconditional mean prediction for any of the fitted model types."""
    return np.asarray(model.predict(np.asarray(X, dtype=float)), dtype=float)


def conditional_draws(model, X, rng) -> np.ndarray:
    """One draw per row of ``X`` from the fitted conditional distribution."""
    X = np.asarray(X, dtype=float)
    if isinstance(model, TobitFit):
        latent = X @ model.coefficients + model.sigma * rng.standard_normal(X.shape[0])
        return np.maximum(latent, 0.0)
    if isinstance(model, TwoPartFit):
        use = rng.random(X.shape[0]) < model.prob_positive(X)
        phi = model.positive_part.phi_mle
        amount = rng.gamma(1.0 / phi, model.positive_mean(X) * phi)
        return np.where(use, amount, 0.0)
    if isinstance(model, FittedGlm):
        mu = model.predict(X)
        if isinstance(model.family, Tweedie):
            return sample_arrays(mu, model.phi_mle, model.family.p, rng)
        if isinstance(model.family, Gamma):
            return rng.gamma(1.0 / model.phi_mle, mu * model.phi_mle)
        return (rng.random(X.shape[0]) < mu).astype(float)
    raise TypeError(f"unsupported model type {type(model).__name__}")


# --------------------------------------------------------------------------
# Q-Q and mean-variance tables


@dataclass(frozen=True)
class QQTable:
    levels: np.ndarray
    empirical: np.ndarray
    model: np.ndarray

    def rows(self):
        return zip(self.levels, self.empirical, self.model)


def qq_table(data: Dataset, model, levels=DEFAULT_LEVELS, replicates: int = 100,
             seed: int = 0) -> QQTable:
    """Empirical against model-implied marginal quantiles.

    The model curve is the average over ``replicates`` of the quantiles of
    one simulated response per observation, each drawn from that
    observation's fitted conditional distribution.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.size and not (np.all(np.diff(levels) > 0) and levels[0] > 0 and levels[-1] < 1):
        raise ValueError("levels must be strictly increasing inside (0, 1)")
    if levels.size == 0:
        return QQTable(levels, np.zeros(0), np.zeros(0))
    empirical = np.quantile(data.response, levels, method="inverted_cdf")
    rng = np.random.default_rng(seed)
    acc = np.zeros(levels.size)
    for _ in range(replicates):
        draws = conditional_draws(model, data.design, rng)
        acc += np.quantile(draws, levels, method="inverted_cdf")
    return QQTable(levels, empirical, acc / replicates)


@dataclass(frozen=True)
class MeanVarianceTable:
    bin_mean: np.ndarray
    bin_variance: np.ndarray
    dispersion: float
    power: float
    reference_powers: tuple[float, ...] = REFERENCE_POWERS

    def reference_curve(self, p, mu=None) -> np.ndarray:
        mu = self.bin_mean if mu is None else np.asarray(mu, dtype=float)
        return self.dispersion * mu ** p

    def slope(self) -> float:
        """Least-squares slope of log variance on log mean across bins."""
        ok = (self.bin_mean > 0) & (self.bin_variance > 0)
        x, v = np.log(self.bin_mean[ok]), np.log(self.bin_variance[ok])
        return float(np.polyfit(x, v, 1)[0])


def mean_variance_bins(data: Dataset, fit: FittedGlm, n_bins: int = 20) -> MeanVarianceTable:
    """Bin observations into ``n_bins`` equal-count groups ordered by fitted mean."""
    if data.n < n_bins:
        raise ValueError(f"need at least {n_bins} observations, got {data.n}")
    mu = fit.predict(data.design)
    order = np.argsort(mu, kind="stable")
    means, variances = [], []
    for chunk in np.array_split(order, n_bins):
        m = mu[chunk]
        # a constant bin keeps its exact value rather than a rounded average
        means.append(m[0] if m.min() == m.max() else np.mean(m))
        variances.append(np.var(data.response[chunk], ddof=1) if chunk.size > 1 else 0.0)
    p = fit.family.p if isinstance(fit.family, Tweedie) else math.nan
    phi = fit.phi_mle if math.isfinite(fit.phi_mle) else fit.dispersion
    return MeanVarianceTable(np.array(means), np.array(variances), float(phi), float(p))


# --------------------------------------------------------------------------
# comparison report


@dataclass
class ModelScore:
    name: str
    loglik: float
    dispersion: float
    rmse: float


@dataclass
class ComparisonReport:
    summary: DatasetSummary
    scores: dict[str, ModelScore]
    qq: dict[str, QQTable]
    predictions: dict[str, tuple[np.ndarray, np.ndarray]]
    meanvar: MeanVarianceTable
    fits: dict[str, dict] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": vars(self.summary),
            "models": {
                name: {"loglik": s.loglik, "dispersion": s.dispersion, "rmse": s.rmse}
                for name, s in self.scores.items()
            },
            "fits": self.fits,
            "qq": {
                name: {"level": t.levels.tolist(), "empirical": t.empirical.tolist(),
                       "model": t.model.tolist()}
                for name, t in self.qq.items()
            },
            "meanvar": {
                "bin_mean": self.meanvar.bin_mean.tolist(),
                "bin_variance": self.meanvar.bin_variance.tolist(),
                "dispersion": self.meanvar.dispersion,
                "power": self.meanvar.power,
                "slope": self.meanvar.slope(),
                "reference": {repr(p): self.meanvar.reference_curve(p).tolist()
                              for p in self.meanvar.reference_powers},
            },
            "notes": list(self.notes),
        }


def fit_models(data: Dataset, power="auto") -> dict:
    """Fit the three models.  ``power`` is ``"auto"`` (profile) or a number."""
    out = {}
    if power == "auto":
        prof = profile_fit(data)
        out["tweedie"] = prof.fit_at_p_hat
        out["_profile"] = prof
    else:
        out["tweedie"] = irls_fit(data, Tweedie(float(power)), link="log", dispersion="mle")
    out["twopart"] = fit_twopart(data)
    out["tobit"] = tobit_fit(data)
    return out


def _dispersion(model) -> float:
    if isinstance(model, FittedGlm):
        return float(model.dispersion)
    if isinstance(model, TwoPartFit):
        return float(model.positive_part.dispersion)
    return 1.0


def compare(data: Dataset, spec: SplitSpec, power="auto", replicates: int = 100,
            levels=DEFAULT_LEVELS) -> ComparisonReport:
    """Full-sample fits, Q-Q and mean-variance tables, and one split's test RMSE."""
    full = fit_models(data, power)
    notes = []
    if "_profile" in full:
        notes.extend(full["_profile"].notes)
    train, test = split(data, spec)
    on_train = fit_models(train, power)
    scores, preds, qq = {}, {}, {}
    for i, name in enumerate(MODEL_ORDER):
        model = full[name]
        pred = predict_mean(on_train[name], test.design)
        preds[name] = (pred, test.response.copy())
        scores[name] = ModelScore(name, float(model.log_likelihood), _dispersion(model),
                                  rmse(pred, test.response))
        qq[name] = qq_table(data, model, levels=levels, replicates=replicates, seed=spec.seed + i)
    fits = {name: full[name].to_dict() for name in MODEL_ORDER}
    tw = full["tweedie"]
    fits["tweedie"]["p"] = tw.family.p
    if "_profile" in full:
        fits["tweedie"]["profile"] = full["_profile"].to_dict()
    notes.append("two-part log-likelihood is the exact sum of the binary and Gamma parts")
    return ComparisonReport(
        summary=summarize(data),
        scores=scores,
        qq=qq,
        predictions=preds,
        meanvar=mean_variance_bins(data, tw),
        fits=fits,
        config={"train_n": spec.train_n, "test_n": spec.test_n, "seed": spec.seed,
                "power": power, "replicates": replicates},
        notes=notes,
    )


def rmse_over_splits(data: Dataset, train_n: int, test_n: int, seeds, power="auto") -> dict:
    """Test RMSE per model for each seeded split; returns name -> list of RMSEs."""
    out = {name: [] for name in MODEL_ORDER}
    for seed in seeds:
        train, test = split(data, SplitSpec(train_n, test_n, int(seed)))
        models = fit_models(train, power)
        for name in MODEL_ORDER:
            out[name].append(rmse(predict_mean(models[name], test.design), test.response))
    return out


# --------------------------------------------------------------------------
# rendering


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_rows(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def render_report(report: ComparisonReport, out_dir, formats=("json", "csv", "svg")) -> list[Path]:
    """Write the report files into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "report.json"
        path.write_text(to_json(report.to_dict()), encoding="utf-8")
        written.append(path)
    if "csv" in formats:
        for name, table in report.qq.items():
            path = out / f"qq_{name}.csv"
            _write_rows(path, ["level", "empirical", "model"], table.rows())
            written.append(path)
        for name, (pred, truth) in report.predictions.items():
            path = out / f"pred_{name}.csv"
            _write_rows(path, ["predicted", "observed"], zip(pred, truth))
            written.append(path)
        mv = report.meanvar
        path = out / "meanvar.csv"
        header = ["bin_mean", "bin_variance"] + [f"ref_p{p!r}" for p in mv.reference_powers]
        refs = [mv.reference_curve(p) for p in mv.reference_powers]
        _write_rows(path, header, zip(mv.bin_mean, mv.bin_variance, *refs))
        written.append(path)
    if "svg" in formats:
        from . import plotting

        written.extend(plotting.render_figures(report, out))
    return written
