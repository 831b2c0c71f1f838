"""The three regressors: least squares, nearest neighbors, boosted symmetric trees.

All estimators follow the fit/predict convention with hyperparameters as
constructor arguments, so they clone and grid-search cleanly. Fitting is
deterministic; predictions on the same matrix are identical across calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .errors import ColumnCountMismatch, EmptyInput, KTooLarge, LengthMismatch, TooFewRows

MODEL_KINDS = ("linear", "knn", "boosted")


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    return X


def _as_xy(X, y):
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise LengthMismatch(X.shape[0], y.shape)
    return X, y


def _check_columns(X, expected):
    if X.shape[1] != expected:
        raise ColumnCountMismatch(expected, X.shape[1])


class LinearRegressor(BaseEstimator, RegressorMixin):
    """Ordinary least squares with an intercept.

    Solved through a QR factorization of the augmented design matrix; a
    rank-deficient design falls back to the SVD minimum-norm solution and
    sets rank_deficient_ instead of failing.
    """

    def fit(self, X, y):
        X, y = _as_xy(X, y)
        if X.shape[0] == 0:
            raise EmptyInput("training data")
        design = np.column_stack([X, np.ones(X.shape[0])])
        q, r = np.linalg.qr(design)
        diag = np.abs(np.diag(r))
        tol = max(design.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
        self.rank_deficient_ = bool(np.any(diag <= tol)) or design.shape[0] < design.shape[1]
        if self.rank_deficient_:
            solution = np.linalg.lstsq(design, y, rcond=None)[0]
        else:
            solution = _back_substitute(r, q.T @ y)
        self.coef_ = solution[:-1]
        self.intercept_ = float(solution[-1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError("fit before predict")
        X = _as_matrix(X)
        _check_columns(X, self.n_features_in_)
        return X @ self.coef_ + self.intercept_


def _back_substitute(r, b):
    n = r.shape[1]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


class KnnRegressor(BaseEstimator, RegressorMixin):
    """k-nearest-neighbors regression: unweighted mean of the k nearest targets.

    Distances are Euclidean; exact ties are broken toward the lower stored
    row index. The fit is lazy, keeping a verbatim copy of the data.
    """

    def __init__(self, k=13):
        self.k = k

    def fit(self, X, y):
        X, y = _as_xy(X, y)
        if int(self.k) != self.k or not 1 <= self.k <= X.shape[0]:
            raise KTooLarge(self.k, X.shape[0])
        self.train_X_ = X.copy()
        self.train_y_ = y.copy()
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "train_X_"):
            raise NotFittedError("fit before predict")
        X = _as_matrix(X)
        _check_columns(X, self.n_features_in_)
        out = np.empty(X.shape[0])
        for i, query in enumerate(X):
            d2 = ((self.train_X_ - query) ** 2).sum(axis=1)
            nearest = np.argsort(d2, kind="stable")[: self.k]
            out[i] = self.train_y_[nearest].mean()
        return out


@dataclass(frozen=True)
class ObliviousTree:
    """Depth-symmetric tree: one shared (feature, threshold) per level.

    A row's leaf index packs one bit per level (1 = feature value above the
    threshold). Leaves never reached during fitting carry value 0, so only
    occupied leaves are stored.
    """

    feature_ids: tuple
    thresholds: tuple
    leaf_values: dict

    @property
    def depth(self) -> int:
        return len(self.feature_ids)

    @property
    def n_leaves(self) -> int:
        return 2 ** self.depth

    def leaf_indices(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        for level, (f, thr) in enumerate(zip(self.feature_ids, self.thresholds)):
            idx |= (X[:, f] > thr).astype(np.int64) << level
        return idx

    def predict(self, X) -> np.ndarray:
        idx = self.leaf_indices(X)
        return np.array([self.leaf_values.get(int(i), 0.0) for i in idx])

    def dense_leaf_values(self) -> np.ndarray:
        """Full 2^depth leaf array; only sensible for small depths."""
        out = np.zeros(self.n_leaves)
        for i, v in self.leaf_values.items():
            out[i] = v
        return out


def _scan_feature(xs, rs, ls, total_sums, total_counts, l2, min_leaf):
    """Best (gain, threshold) for one feature at one level.

    Walks rows in ascending feature order, shifting each row from the right
    to the left side of its leaf and updating the total gain in O(1).
    Removing a leaf's squared error equals S^2 (n + 2*lambda) / (n + lambda)^2
    for the regularized value v = S / (n + lambda); empty leaves contribute 0.
    Candidates are evaluated at gaps between distinct values; the first gap
    achieving the maximum wins, so ties break toward the lower threshold.
    """
    n_leaves = total_sums.shape[0]
    left_s = np.zeros(n_leaves)
    left_c = np.zeros(n_leaves)
    current = 0.0
    violations = 0
    for j in range(n_leaves):
        d = total_counts[j] + l2
        if d > 0.0:
            current += total_sums[j] * total_sums[j] * (total_counts[j] + 2.0 * l2) / (d * d)
        if min_leaf > 0 and 0.0 < total_counts[j] < min_leaf:
            violations += 1
    best_gain = -np.inf
    best_thr = np.nan
    n = xs.shape[0]
    for i in range(n):
        j = ls[i]
        rc = total_counts[j] - left_c[j]
        d = left_c[j] + l2
        if d > 0.0:
            current -= left_s[j] * left_s[j] * (left_c[j] + 2.0 * l2) / (d * d)
        d = rc + l2
        if d > 0.0:
            right_s = total_sums[j] - left_s[j]
            current -= right_s * right_s * (rc + 2.0 * l2) / (d * d)
        if min_leaf > 0:
            if 0.0 < left_c[j] < min_leaf:
                violations -= 1
            if 0.0 < rc < min_leaf:
                violations -= 1
        left_s[j] += rs[i]
        left_c[j] += 1.0
        rc -= 1.0
        d = left_c[j] + l2
        if d > 0.0:
            current += left_s[j] * left_s[j] * (left_c[j] + 2.0 * l2) / (d * d)
        d = rc + l2
        if d > 0.0:
            right_s = total_sums[j] - left_s[j]
            current += right_s * right_s * (rc + 2.0 * l2) / (d * d)
        if min_leaf > 0:
            if 0.0 < left_c[j] < min_leaf:
                violations += 1
            if 0.0 < rc < min_leaf:
                violations += 1
        if i + 1 < n and xs[i] < xs[i + 1]:
            if violations == 0 and current > best_gain:
                best_gain = current
                best_thr = 0.5 * (xs[i] + xs[i + 1])
    return best_gain, best_thr


try:
    from numba import njit as _njit

    _scan_feature_fast = _njit(cache=True)(_scan_feature)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _scan_feature_fast = _scan_feature


def _fit_oblivious_tree(X, residual, depth, l2, min_samples_leaf, sort_orders):
    """Greedy level-wise fit minimizing squared error of regularized leaf values.

    Every level's candidate split is scored against all current partitions
    simultaneously; ties go to the lower feature index, then the lower
    threshold. Returns (tree, per-row leaf values) or None when no feature
    has two distinct values.
    """
    n = X.shape[0]
    leaf = np.zeros(n, dtype=np.int64)
    feature_ids = []
    thresholds = []
    for level in range(depth):
        uniq, inv = np.unique(leaf, return_inverse=True)
        n_leaves = uniq.shape[0]
        total_sums = np.bincount(inv, weights=residual, minlength=n_leaves)
        total_counts = np.bincount(inv, minlength=n_leaves).astype(float)
        best = None  # (gain, feature, threshold)
        for f, order in enumerate(sort_orders):
            gain, thr = _scan_feature_fast(
                X[order, f], residual[order], inv[order],
                total_sums, total_counts, float(l2), float(min_samples_leaf),
            )
            if np.isfinite(gain) and (best is None or gain > best[0]):
                best = (gain, f, thr)
        if best is None:
            break
        _, f, thr = best
        feature_ids.append(f)
        thresholds.append(thr)
        leaf = leaf | ((X[:, f] > thr).astype(np.int64) << level)
    if not feature_ids:
        return None
    uniq, inv = np.unique(leaf, return_inverse=True)
    sums = np.bincount(inv, weights=residual, minlength=uniq.shape[0])
    counts = np.bincount(inv, minlength=uniq.shape[0]).astype(float)
    values = sums / (counts + l2) if l2 > 0 else np.divide(
        sums, counts, out=np.zeros_like(sums), where=counts > 0
    )
    tree = ObliviousTree(
        feature_ids=tuple(feature_ids),
        thresholds=tuple(thresholds),
        leaf_values={int(uniq[j]): float(values[j]) for j in range(uniq.shape[0])},
    )
    return tree, values[inv]


class ObliviousBoostingRegressor(BaseEstimator, RegressorMixin):
    """Gradient boosting over depth-symmetric trees with L2 leaf regularization.

    Each iteration fits one tree to the current residuals; a leaf's value is
    sum(residuals) / (count + l2_leaf_reg) and the prediction is the target
    mean plus learning_rate times the sum of tree outputs. Split thresholds
    are the midpoints between consecutive distinct feature values, searched
    exhaustively. The fit is deterministic; `seed` is carried for config
    compatibility but the exhaustive search never draws from it.
    """

    def __init__(self, learning_rate=0.1, depth=6, l2_leaf_reg=7.0,
                 num_iterations=500, min_samples_leaf=0, seed=0):
        self.learning_rate = learning_rate
        self.depth = depth
        self.l2_leaf_reg = l2_leaf_reg
        self.num_iterations = num_iterations
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed

    def fit(self, X, y):
        X, y = _as_xy(X, y)
        if X.shape[0] < 2:
            raise TooFewRows(2, X.shape[0])
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 1 <= self.depth <= 62:
            raise ValueError("depth must be in [1, 62]; leaf indices pack into int64")
        if self.l2_leaf_reg < 0:
            raise ValueError("l2_leaf_reg must be >= 0")
        if self.num_iterations < 0:
            raise ValueError("num_iterations must be >= 0")

        sort_orders = [
            np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])
        ]

        self.base_prediction_ = float(y.mean())
        self.trees_ = []
        self.degenerate_ = False
        self.n_features_in_ = X.shape[1]
        residual = y - self.base_prediction_
        for _ in range(int(self.num_iterations)):
            fitted = _fit_oblivious_tree(
                X, residual, int(self.depth), float(self.l2_leaf_reg),
                int(self.min_samples_leaf), sort_orders,
            )
            if fitted is None:
                self.degenerate_ = True
                break
            tree, row_values = fitted
            self.trees_.append(tree)
            residual = residual - self.learning_rate * row_values
        return self

    def predict(self, X):
        if not hasattr(self, "trees_"):
            raise NotFittedError("fit before predict")
        X = _as_matrix(X)
        _check_columns(X, self.n_features_in_)
        out = np.full(X.shape[0], self.base_prediction_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
        return out
