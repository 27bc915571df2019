"""CSV ingestion, the RAND HIE column schema and dataset summaries."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

INTERCEPT = "intercept"

# covariate order of the cost regressions (RAND HIE, first year, adults)
RAND_COVARIATES = (
    "age", "disea", "physlm", "logc", "idp", "lpi", "fmde",
    "linc", "lfam", "female", "black", "educdec", "hlthg",
)


class DataError(ValueError):
    """Input data violates the schema or a model precondition."""


@dataclass(frozen=True)
class Dataset:
    """Response vector, design matrix (intercept first) and column names."""

    response: np.ndarray
    design: np.ndarray
    names: tuple[str, ...]
    dropped_rows: int = 0

    def __post_init__(self):
        y = np.asarray(self.response, dtype=float)
        X = np.asarray(self.design, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"shape mismatch: response {y.shape}, design {X.shape}")
        if len(self.names) != X.shape[1]:
            raise DataError("one name per design column is required")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("non-finite values in dataset")
        if np.any(y < 0):
            raise DataError("response must be non-negative")
        if y.shape[0] <= X.shape[1]:
            raise DataError(f"need more rows ({y.shape[0]}) than columns ({X.shape[1]})")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return self.response.shape[0]

    @property
    def k(self) -> int:
        return self.design.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.response[rows], self.design[rows], self.names)

    def with_response(self, y) -> "Dataset":
        return Dataset(np.asarray(y, dtype=float), self.design, self.names)

    @classmethod
    def from_arrays(cls, y, X, names: Sequence[str] | None = None, intercept=True) -> "Dataset":
        """Build from a covariate matrix, prepending the intercept column."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if names is None:
            names = [f"x{i + 1}" for i in range(X.shape[1])]
        if intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
            names = [INTERCEPT, *names]
        return cls(np.asarray(y, dtype=float), X, tuple(names))


@dataclass(frozen=True)
class SchemaConfig:
    response_column: str = "cost"
    covariate_columns: tuple[str, ...] = field(default=RAND_COVARIATES)


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    zero_fraction: float
    mean: float
    max: float


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    if text == "" or text.upper() in ("NA", "NAN"):
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at row {row}, column {column!r}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {column!r}")
    return value


def load_csv(path, schema: SchemaConfig = SchemaConfig(), drop_missing: bool = False) -> Dataset:
    """Read a headered, comma separated file into a :class:`Dataset`.

    Rows are numbered from 1 for the first data line.  A missing cell raises
    :class:`DataError` naming its location and the number of incomplete rows,
    unless ``drop_missing`` is set, in which case incomplete rows are removed
    and counted.  Nothing is imputed.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        wanted = [schema.response_column, *schema.covariate_columns]
        missing_cols = [c for c in wanted if c not in header]
        if missing_cols:
            raise DataError(f"{path}: missing column(s) {', '.join(missing_cols)}")
        pos = [header.index(c) for c in wanted]
        rows = []
        for lineno, record in enumerate(reader, start=1):
            if not record or all(not r.strip() for r in record):
                continue
            if len(record) < len(header):
                record = record + [""] * (len(header) - len(record))
            rows.append([_parse_cell(record[j], lineno, c) for j, c in zip(pos, wanted)])
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    incomplete = np.isnan(table).any(axis=1)
    n_bad = int(incomplete.sum())
    if n_bad and not drop_missing:
        r, c = np.argwhere(np.isnan(table))[0]
        raise DataError(f"{path}: missing value at row {r + 1}, column {wanted[c]!r} "
                        f"({n_bad} incomplete row(s))")
    if n_bad:
        logger.warning("dropped %d incomplete row(s) from %s", n_bad, path)
        table = table[~incomplete]
    y = table[:, 0]
    if np.any(y < 0):
        r = int(np.argmax(y < 0))
        raise DataError(f"{path}: negative response at data row {r + 1}")
    X = np.column_stack([np.ones(len(y)), table[:, 1:]])
    return Dataset(y, X, (INTERCEPT, *schema.covariate_columns), dropped_rows=n_bad)


def write_csv(data: Dataset, path, response_column: str = "cost") -> None:
    """Write the response and non-intercept columns; ``repr`` keeps floats exact."""
    cols = [i for i, name in enumerate(data.names) if name != INTERCEPT]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([response_column, *(data.names[i] for i in cols)])
        for yi, row in zip(data.response, data.design):
            w.writerow([repr(float(yi)), *(repr(float(row[i])) for i in cols)])


def summarize(data: Dataset) -> DatasetSummary:
    y = data.response
    return DatasetSummary(
        n=int(y.shape[0]),
        zero_fraction=float(np.mean(y == 0)),
        mean=float(np.mean(y)),
        max=float(np.max(y)),
    )
