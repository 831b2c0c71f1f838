"""k-fold cross-validation, RMSE, grid search, and holdout reports.

Fold assignment is a seeded shuffle followed by contiguous chunking, the
first n mod k folds taking the extra element. The range scaler is refitted
inside every fold on that fold's training rows only, so no statistics leak
from held-out rows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyInput, KOutOfRange, LengthMismatch
from .features import FeatureTable, apply_scaler, fit_range_scaler
from .models import (
    KnnRegressor,
    LinearRegressor,
    ObliviousBoostingRegressor,
)

MODEL_REGISTRY = {
    "linear": LinearRegressor,
    "knn": KnnRegressor,
    "boosted": ObliviousBoostingRegressor,
}

# Holdout RMSEs within this of the best are treated as tied; the tie is
# broken by the smaller residual standard deviation.
SELECTION_RMSE_TIE_BAND = 0.01


@dataclass(frozen=True)
class ModelSpec:
    """A model family name plus its hyperparameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def build(self):
        if self.kind not in MODEL_REGISTRY:
            raise ValueError(f"unknown model kind: {self.kind!r}")
        return MODEL_REGISTRY[self.kind](**self.params)

    def describe(self) -> str:
        if not self.params:
            return self.kind
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class FoldPlan:
    n: int
    k: int
    seed: int
    folds: tuple


@dataclass(frozen=True)
class CvResult:
    spec: ModelSpec
    per_fold_rmse: tuple
    mean_rmse: float
    std_rmse: float
    fold_scalers: tuple = ()


@dataclass(frozen=True)
class GridSpec:
    """Named hyperparameter axes, each a finite ordered value list."""

    axes: tuple

    @classmethod
    def from_dict(cls, axes: dict) -> "GridSpec":
        if not axes:
            raise ValueError("grid must have at least one axis")
        return cls(tuple((name, tuple(values)) for name, values in axes.items()))

    def points(self):
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this as a test class

    spec: ModelSpec
    holdout_rmse: float
    residual_std: float
    predictions: tuple  # (row id, truth, prediction)


def rmse(predictions, truth) -> float:
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape:
        raise LengthMismatch(predictions.shape, truth.shape)
    if predictions.size == 0:
        raise EmptyInput("rmse input")
    return float(np.sqrt(np.mean((predictions - truth) ** 2)))


def kfold_indices(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle then contiguous chunks; first n mod k folds get one extra."""
    if not 2 <= k <= n:
        raise KOutOfRange(k, n)
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(tuple(int(j) for j in perm[start: start + size]))
        start += size
    return FoldPlan(n=n, k=k, seed=seed, folds=tuple(folds))


def _sample_std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def _fit_and_score(spec, table, train_idx, test_idx):
    scaler = fit_range_scaler(table.X, train_idx)
    X_train = apply_scaler(table.X[train_idx], scaler)
    X_test = apply_scaler(table.X[test_idx], scaler)
    model = spec.build().fit(X_train, table.y[train_idx])
    predictions = model.predict(X_test)
    return model, scaler, predictions


def fit_on(spec: ModelSpec, table: FeatureTable, train_idx):
    """Fit the scaler and model on the given rows; returns (model, scaler)."""
    train_idx = np.asarray(train_idx, dtype=np.int64)
    scaler = fit_range_scaler(table.X, train_idx)
    model = spec.build().fit(apply_scaler(table.X[train_idx], scaler), table.y[train_idx])
    return model, scaler


def cross_validate(spec: ModelSpec, table: FeatureTable, plan: FoldPlan) -> CvResult:
    """One RMSE per fold, scaler refitted on each fold's training rows."""
    if plan.n != table.n_rows:
        raise LengthMismatch(plan.n, table.n_rows)
    fold_rmses = []
    fold_scalers = []
    for i, fold in enumerate(plan.folds):
        test_idx = np.array(fold, dtype=np.int64)
        train_idx = np.array(
            [j for o, other in enumerate(plan.folds) if o != i for j in other], dtype=np.int64
        )
        try:
            _, scaler, predictions = _fit_and_score(spec, table, train_idx, test_idx)
        except DataError as exc:
            exc.args = (f"fold {i} of {spec.describe()}: {exc}",)
            raise
        fold_rmses.append(rmse(predictions, table.y[test_idx]))
        fold_scalers.append(scaler)
    return CvResult(
        spec=spec,
        per_fold_rmse=tuple(fold_rmses),
        mean_rmse=float(np.mean(fold_rmses)),
        std_rmse=_sample_std(fold_rmses),
        fold_scalers=tuple(fold_scalers),
    )


def grid_search(kind: str, grid: GridSpec, table: FeatureTable, plan: FoldPlan):
    """Exhaustive search; best by mean RMSE, then std, then grid order.

    Returns (best params dict, all CvResults in grid order). Every grid
    point is scored against the same fold plan for comparability.
    """
    results = []
    best = None
    best_key = None
    for order, params in enumerate(grid.points()):
        result = cross_validate(ModelSpec(kind=kind, params=params), table, plan)
        results.append(result)
        key = (result.mean_rmse, result.std_rmse, order)
        if best_key is None or key < best_key:
            best_key = key
            best = params
    return best, results


def evaluate_holdout(spec: ModelSpec, table: FeatureTable, split) -> TestReport:
    """Fit scaler and model on the train indices, report holdout metrics."""
    train_idx, test_idx = (np.asarray(s, dtype=np.int64) for s in split)
    if np.intersect1d(train_idx, test_idx).size:
        raise ValueError("train and test indices overlap")
    _, _, predictions = _fit_and_score(spec, table, train_idx, test_idx)
    truth = table.y[test_idx]
    residuals = truth - predictions
    return TestReport(
        spec=spec,
        holdout_rmse=rmse(predictions, truth),
        residual_std=_sample_std(residuals),
        predictions=tuple(
            (table.row_ids[int(j)], float(t), float(p))
            for j, t, p in zip(test_idx, truth, predictions)
        ),
    )


def select_best(reports) -> TestReport:
    """Lowest holdout RMSE wins; near-ties (within the tie band) are
    resolved by the smaller residual standard deviation."""
    reports = list(reports)
    if not reports:
        raise EmptyInput("reports")
    floor_rmse = min(r.holdout_rmse for r in reports)
    tied = [r for r in reports if r.holdout_rmse <= floor_rmse + SELECTION_RMSE_TIE_BAND]
    return min(tied, key=lambda r: (r.residual_std, r.holdout_rmse))
