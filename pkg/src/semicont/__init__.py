"""Tweedie, two-part and Tobit regression for semicontinuous outcomes."""
from .data import Dataset, DatasetSummary, DataError, SchemaConfig, load_csv, summarize, write_csv
from .density import (
    CompoundRepresentation,
    TweedieParams,
    cdf,
    log_density,
    quantile,
    sample,
    to_compound,
    zero_probability,
)
from .evaluation import (
    ComparisonReport,
    SplitSpec,
    compare,
    mean_variance_bins,
    qq_table,
    render_report,
    rmse,
    split,
)
from .glm import (
    Binomial,
    ConvergenceError,
    FittedGlm,
    Gamma,
    SingularDesignError,
    Tweedie,
    irls_fit,
    model_loglik,
    pearson_dispersion,
)
from .profile import BoundaryWarning, ProfileResult, profile_fit
from .tobit import TobitFit, tobit_fit, tobit_predict
from .twopart import TwoPartFit, fit_twopart, predict_twopart

__version__ = "0.1.0"
