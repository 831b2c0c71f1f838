"""Modeling table assembly: encoding, scaling, correlations, splits.

The feature matrix is built from topic proportions plus episode metadata.
Directors become lexicographic ordinal codes, every independent column is
range-scaled to [0, 1] on whatever rows the scaler was fitted on, and the
rating target is never transformed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import ColumnCountMismatch, InvariantViolation, TooFewRows

BASE_FEATURE_COLUMNS = ("dominant_topic", "director_code", "viewers_millions", "review_count")
TARGET_COLUMN = "imdb_rating"


def feature_column_names(num_topics: int):
    return tuple(f"topic_{i}" for i in range(num_topics)) + BASE_FEATURE_COLUMNS


@dataclass(frozen=True)
class EncoderMap:
    """Director name -> ordinal code, lexicographically smallest name first."""

    mapping: dict
    order_rule: str = "lexicographic"

    @property
    def unknown_code(self) -> int:
        """Reserved code for names unseen at fit time (one past the largest)."""
        return len(self.mapping)


@dataclass(frozen=True)
class ScalerParams:
    """Per-column min/max plus the row indices they were computed on."""

    mins: tuple
    maxs: tuple
    fitted_on: tuple

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins and maxs must have equal length")
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("per-column min must not exceed max")


def encode_directors(names):
    """Codes via lexicographic order of the unique names; stable under reordering."""
    unique = sorted(set(names))
    mapping = {name: code for code, name in enumerate(unique)}
    codes = np.array([mapping[name] for name in names], dtype=np.int64)
    return codes, EncoderMap(mapping=mapping)


def encode_with(encoder: EncoderMap, names, allow_unknown=False):
    """Apply a fitted EncoderMap; returns (codes, unknown names in input order)."""
    codes = np.empty(len(names), dtype=np.int64)
    unknown = []
    for i, name in enumerate(names):
        code = encoder.mapping.get(name)
        if code is None:
            if not allow_unknown:
                raise KeyError(f"unknown director name: {name!r}")
            unknown.append(name)
            code = encoder.unknown_code
        codes[i] = code
    return codes, unknown


def fit_range_scaler(X, rows) -> ScalerParams:
    """Column min/max over the given rows only."""
    X = np.asarray(X, dtype=float)
    rows = np.asarray(list(rows), dtype=np.int64)
    if rows.size == 0:
        raise ValueError("scaler must be fitted on at least one row")
    sub = X[rows]
    return ScalerParams(
        mins=tuple(float(v) for v in sub.min(axis=0)),
        maxs=tuple(float(v) for v in sub.max(axis=0)),
        fitted_on=tuple(int(r) for r in rows),
    )


def apply_scaler(X, params: ScalerParams) -> np.ndarray:
    """x' = (x - min) / (max - min); constant columns map to 0; no clipping."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(params.mins):
        got = X.shape[1] if X.ndim == 2 else None
        raise ColumnCountMismatch(len(params.mins), got)
    mins = np.array(params.mins)
    spans = np.array(params.maxs) - mins
    out = np.zeros_like(X, dtype=float)
    nonconst = spans != 0
    out[:, nonconst] = (X[:, nonconst] - mins[nonconst]) / spans[nonconst]
    return out


class RangeScaler(BaseEstimator, TransformerMixin):
    """Min-max scaler over the rows seen at fit time."""

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        self.params_ = fit_range_scaler(X, np.arange(X.shape[0]))
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            raise NotFittedError("fit the scaler before transforming")
        return apply_scaler(X, self.params_)


class DirectorEncoder(BaseEstimator, TransformerMixin):
    """Ordinal encoder for director names, lexicographic code order.

    handle_unknown: "error" raises on unseen names, "reserved" maps them to
    the reserved code one past the largest fitted code.
    """

    def __init__(self, handle_unknown="error"):
        self.handle_unknown = handle_unknown

    def fit(self, names, y=None):
        _, self.encoder_map_ = encode_directors(names)
        return self

    def transform(self, names):
        if not hasattr(self, "encoder_map_"):
            raise NotFittedError("fit the encoder before transforming")
        codes, self.last_unknown_ = encode_with(
            self.encoder_map_, names, allow_unknown=self.handle_unknown == "reserved"
        )
        return codes


@dataclass
class FeatureTable:
    """Numeric independent variables plus the untransformed rating target."""

    row_ids: tuple
    column_names: tuple
    X: np.ndarray
    y: np.ndarray
    encoder: EncoderMap | None = None
    scaler: ScalerParams | None = None

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    def subset(self, rows) -> "FeatureTable":
        rows = np.asarray(list(rows), dtype=np.int64)
        return replace(
            self,
            row_ids=tuple(self.row_ids[i] for i in rows),
            X=self.X[rows].copy(),
            y=self.y[rows].copy(),
        )


def build_feature_table(dataset, theta, doc_ids) -> FeatureTable:
    """Join topic proportions with metadata into the modeling table.

    `theta` rows must line up with `doc_ids`, which must match the dataset's
    episode ids as a set. Topic proportions are validated to sum to 1.
    """
    theta = np.asarray(theta, dtype=float)
    order = {doc_id: i for i, doc_id in enumerate(doc_ids)}
    missing = [r.episode_id for r in dataset.records if r.episode_id not in order]
    if missing or len(order) != len(dataset.records):
        raise InvariantViolation(
            f"topic rows and dataset rows disagree (first missing: {missing[:3]})"
        )
    bad = np.where(np.abs(theta.sum(axis=1) - 1.0) > 1e-6)[0]
    if bad.size:
        raise InvariantViolation(f"theta row {bad[0]} does not sum to 1")

    num_topics = theta.shape[1]
    codes, encoder = encode_directors([r.director_name for r in dataset.records])
    rows = []
    for i, record in enumerate(dataset.records):
        trow = theta[order[record.episode_id]]
        rows.append(
            list(trow)
            + [
                float(np.argmax(trow)),
                float(codes[i]),
                record.viewers_millions,
                float(record.review_count),
            ]
        )
    return FeatureTable(
        row_ids=tuple(r.episode_id for r in dataset.records),
        column_names=feature_column_names(num_topics),
        X=np.array(rows, dtype=float),
        y=np.array([r.imdb_rating for r in dataset.records], dtype=float),
        encoder=encoder,
    )


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple
    values: np.ndarray
    zero_variance: tuple = ()


def correlation_from_columns(matrix, labels) -> CorrelationMatrix:
    """Pearson r between all column pairs; zero-variance columns get r = 0."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] < 2:
        raise TooFewRows(2, matrix.shape[0])
    centered = matrix - matrix.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    flagged = tuple(labels[j] for j in np.where(norms == 0)[0])
    safe = np.where(norms == 0, 1.0, norms)
    unit = centered / safe
    values = unit.T @ unit
    values = np.clip(values, -1.0, 1.0)
    for j in np.where(norms == 0)[0]:
        values[j, :] = 0.0
        values[:, j] = 0.0
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(labels=tuple(labels), values=values, zero_variance=flagged)


def pearson_matrix(table: FeatureTable) -> CorrelationMatrix:
    """Correlations across all feature columns plus the rating target."""
    matrix = np.column_stack([table.X, table.y])
    return correlation_from_columns(matrix, table.column_names + (TARGET_COLUMN,))


@dataclass(frozen=True)
class DescriptiveStats:
    minimum: float
    maximum: float
    mean: float
    std: float


def describe(values) -> DescriptiveStats:
    """Min/max/mean and the sample standard deviation (n-1 divisor)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("describe needs at least one value")
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return DescriptiveStats(
        minimum=float(values.min()),
        maximum=float(values.max()),
        mean=float(values.mean()),
        std=std,
    )


def histogram(values, bin_width: float, origin: float = 0.0):
    """Half-open bins [start, start + width); returns nonempty bins, ascending."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    bins = np.floor((values - origin) / bin_width).astype(np.int64)
    out = []
    for b in sorted(set(bins.tolist())):
        out.append((origin + b * bin_width, int(np.sum(bins == b))))
    return out


def train_test_split(n: int, train_fraction: float, seed: int, mode: str = "random"):
    """Disjoint, exhaustive (train, test) index arrays; train gets floor(n*f).

    mode "random" shuffles with a PCG64 generator under `seed`;
    "chronological" keeps row order (first rows train).
    """
    if n < 2:
        raise TooFewRows(2, n)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    # guard against float artifacts like 10 * 0.7 = 6.999...
    n_train = int(math.floor(n * train_fraction + 1e-9))
    n_train = min(max(n_train, 1), n - 1)
    if mode == "random":
        rng = np.random.Generator(np.random.PCG64(seed))
        perm = rng.permutation(n)
    elif mode == "chronological":
        perm = np.arange(n)
    else:
        raise ValueError(f"unknown split mode: {mode!r}")
    return perm[:n_train].copy(), perm[n_train:].copy()
