import numpy as np
import pytest

from episcore.errors import ColumnCountMismatch, KTooLarge
from episcore.evaluate import rmse
from episcore.models import (
    KnnRegressor,
    LinearRegressor,
    ObliviousBoostingRegressor,
    ObliviousTree,
)

from conftest import knn_scan_oracle, normal_equation_fit


class TestLinearRegressor:
    def test_exact_line(self):
        model = LinearRegressor().fit(np.array([[0.0], [1.0], [2.0]]), np.array([1.0, 3.0, 5.0]))
        assert model.intercept_ == pytest.approx(1.0, abs=1e-12)
        assert model.coef_[0] == pytest.approx(2.0, abs=1e-12)
        residuals = np.array([1.0, 3.0, 5.0]) - model.predict(np.array([[0.0], [1.0], [2.0]]))
        assert np.max(np.abs(residuals)) < 1e-12

    def test_constant_target(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(10, 2))
        model = LinearRegressor().fit(X, np.full(10, 4.5))
        assert np.allclose(model.coef_, 0.0, atol=1e-10)
        assert model.intercept_ == pytest.approx(4.5)

    def test_recovers_true_weights_under_noise(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 3))
        w = np.array([1.2, -0.7, 0.4])
        y = X @ w + rng.normal(0, 0.01, 20)
        model = LinearRegressor().fit(X, y)
        assert np.max(np.abs(model.coef_ - w)) < 0.05

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(2)
        for trial in range(30):
            n = int(rng.integers(8, 50))
            f = int(rng.integers(1, 7))
            X = rng.normal(size=(n, f))
            y = rng.normal(size=n)
            model = LinearRegressor().fit(X, y)
            coef, intercept = normal_equation_fit(X, y)
            assert np.max(np.abs(model.coef_ - coef)) < 1e-8
            assert abs(model.intercept_ - intercept) < 1e-8

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(25, 4))
        y = rng.normal(size=25)
        model = LinearRegressor().fit(X, y)
        residual = y - model.predict(X)
        design = np.column_stack([X, np.ones(25)])
        assert np.max(np.abs(design.T @ residual)) < 1e-8

    def test_rank_deficient_flagged_minimum_norm(self):
        rng = np.random.default_rng(4)
        base = rng.normal(size=(15, 2))
        X = np.column_stack([base, base[:, 0] + base[:, 1]])  # exact collinearity
        y = rng.normal(size=15)
        model = LinearRegressor().fit(X, y)
        assert model.rank_deficient_
        design = np.column_stack([X, np.ones(15)])
        expected = np.linalg.pinv(design) @ y
        assert np.allclose(np.append(model.coef_, model.intercept_), expected, atol=1e-8)

    def test_predict_validations(self):
        model = LinearRegressor().fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]))
        with pytest.raises(ColumnCountMismatch):
            model.predict(np.ones((2, 3)))
        assert model.predict(np.empty((0, 1))).shape == (0,)

    def test_zero_coefficients_predict_intercept(self):
        model = LinearRegressor()
        model.coef_ = np.zeros(2)
        model.intercept_ = 7.0
        model.n_features_in_ = 2
        model.rank_deficient_ = False
        assert model.predict(np.ones((4, 2))).tolist() == [7.0] * 4


class TestKnnRegressor:
    def test_query_equal_to_train_point_k1(self):
        X = np.array([[0.0], [1.0], [10.0]])
        y = np.array([0.0, 10.0, 100.0])
        model = KnnRegressor(k=1).fit(X, y)
        assert model.predict(np.array([[1.0]]))[0] == 10.0

    def test_k_equals_rows_gives_global_mean(self):
        X = np.array([[0.0], [1.0], [10.0]])
        y = np.array([0.0, 10.0, 100.0])
        model = KnnRegressor(k=3).fit(X, y)
        mean = y.mean()
        assert np.all(model.predict(np.array([[5.0], [-3.0]])) == mean)

    def test_two_nearest_average(self):
        X = np.array([[0.0], [1.0], [10.0]])
        y = np.array([0.0, 10.0, 100.0])
        model = KnnRegressor(k=2).fit(X, y)
        assert model.predict(np.array([[0.4]]))[0] == pytest.approx(5.0)

    def test_k_bounds(self):
        X = np.ones((3, 1))
        with pytest.raises(KTooLarge):
            KnnRegressor(k=0).fit(X, np.ones(3))
        with pytest.raises(KTooLarge):
            KnnRegressor(k=4).fit(X, np.ones(3))

    def test_distance_tie_breaks_to_lower_row_index(self):
        # queries equidistant from rows 0 and 2; row 0 must win
        X = np.array([[0.0], [5.0], [2.0]])
        y = np.array([1.0, 50.0, 9.0])
        model = KnnRegressor(k=1).fit(X, y)
        assert model.predict(np.array([[1.0]]))[0] == 1.0

    def test_matches_exhaustive_scan_oracle(self):
        rng = np.random.default_rng(5)
        for trial in range(25):
            n = int(rng.integers(3, 30))
            f = int(rng.integers(1, 7))
            X = rng.normal(size=(n, f))
            y = rng.normal(size=n)
            queries = rng.normal(size=(6, f))
            for k in range(1, n + 1):
                model = KnnRegressor(k=k).fit(X, y)
                expected = knn_scan_oracle(X, y, queries, k)
                assert np.array_equal(model.predict(queries), expected)

    def test_oracle_agreement_with_exact_ties(self):
        rng = np.random.default_rng(6)
        X = rng.integers(0, 3, size=(12, 2)).astype(float)
        y = rng.integers(0, 10, size=12).astype(float)
        queries = rng.integers(0, 3, size=(8, 2)).astype(float)
        for k in (1, 2, 5, 12):
            model = KnnRegressor(k=k).fit(X, y)
            assert np.array_equal(model.predict(queries), knn_scan_oracle(X, y, queries, k))


class TestObliviousTree:
    def test_hand_walked_depth_one(self):
        tree = ObliviousTree(feature_ids=(0,), thresholds=(0.5,), leaf_values={0: -1.0, 1: 1.0})
        model = ObliviousBoostingRegressor(learning_rate=0.1)
        model.base_prediction_ = 5.0
        model.trees_ = [tree]
        model.degenerate_ = False
        model.n_features_in_ = 1
        out = model.predict(np.array([[0.0], [1.0]]))
        assert out.tolist() == [4.9, 5.1]

    def test_leaf_indices_pack_bits_per_level(self):
        tree = ObliviousTree(
            feature_ids=(0, 1), thresholds=(0.5, 0.5),
            leaf_values={0: 0.0, 1: 1.0, 2: 2.0, 3: 3.0},
        )
        X = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
        assert tree.leaf_indices(X).tolist() == [0, 1, 2, 3]
        assert tree.n_leaves == 4


class TestBoostedRegressor:
    def test_zero_iterations_predicts_mean(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        model = ObliviousBoostingRegressor(num_iterations=0).fit(X, y)
        assert np.all(model.predict(X) == y.mean())

    def test_leaf_value_is_regularized_mean(self):
        # residuals after the mean are (2, 4, -2, -4); the x <= 0.5 leaf holds
        # (2, 4) so with l2 = 2 its value is (2 + 4) / (2 + 2) = 1.5
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        c = 10.0
        y = np.array([c + 2, c + 4, c - 2, c - 4])
        model = ObliviousBoostingRegressor(
            learning_rate=1.0, depth=1, l2_leaf_reg=2.0, num_iterations=1
        ).fit(X, y)
        tree = model.trees_[0]
        assert tree.leaf_values[0] == pytest.approx(1.5)
        assert tree.leaf_values[1] == pytest.approx(-1.5)

    def test_huge_l2_shrinks_to_mean(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        model = ObliviousBoostingRegressor(
            learning_rate=0.1, depth=3, l2_leaf_reg=1e12, num_iterations=50
        ).fit(X, y)
        assert np.max(np.abs(model.predict(X) - y.mean())) < 1e-6

    def test_separable_by_one_feature_fits_exactly(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(40, 1))
        y = (X[:, 0] > 0.5).astype(float) * 3.0
        model = ObliviousBoostingRegressor(
            learning_rate=0.3, depth=1, l2_leaf_reg=0.0, num_iterations=300
        ).fit(X, y)
        predictions = model.predict(X)
        assert rmse(predictions, y) < 0.01
        # least-squares-per-leaf oracle: the optimum is each side's mean
        for side in (0, 1):
            mask = (X[:, 0] > 0.5) == side
            assert np.max(np.abs(predictions[mask] - y[mask].mean())) < 0.01

    def test_training_rmse_non_increasing(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(80, 5))
        y = X @ rng.normal(size=5) + rng.normal(0, 0.3, 80)
        model = ObliviousBoostingRegressor(
            learning_rate=0.1, depth=3, l2_leaf_reg=0.0, num_iterations=60
        ).fit(X, y)
        pred = np.full(80, model.base_prediction_)
        last = rmse(pred, y)
        for tree in model.trees_:
            pred = pred + model.learning_rate * tree.predict(X)
            current = rmse(pred, y)
            assert current <= last + 1e-10
            last = current

    def test_l2_bounded_by_initial_rmse(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(60, 4))
        y = X @ rng.normal(size=4) + rng.normal(0, 0.2, 60)
        model = ObliviousBoostingRegressor(
            learning_rate=0.5, depth=2, l2_leaf_reg=5.0, num_iterations=80
        ).fit(X, y)
        assert rmse(model.predict(X), y) <= np.std(y)

    def test_structurally_oblivious(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        model = ObliviousBoostingRegressor(depth=4, num_iterations=20, l2_leaf_reg=1.0).fit(X, y)
        for tree in model.trees_:
            assert len(tree.feature_ids) == len(tree.thresholds) == tree.depth == 4
            assert all(0 <= f < 3 for f in tree.feature_ids)
            assert all(0 <= leaf < tree.n_leaves for leaf in tree.leaf_values)

    def test_degenerate_constant_features_flagged(self):
        X = np.ones((10, 2))
        y = np.arange(10, dtype=float)
        model = ObliviousBoostingRegressor(num_iterations=5).fit(X, y)
        assert model.degenerate_
        assert model.trees_ == []
        assert np.all(model.predict(X) == y.mean())

    def test_min_samples_leaf_respected(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        model = ObliviousBoostingRegressor(
            depth=2, num_iterations=10, l2_leaf_reg=0.0, min_samples_leaf=5
        ).fit(X, y)
        for tree in model.trees_:
            counts = np.bincount(tree.leaf_indices(X), minlength=tree.n_leaves)
            assert np.all((counts == 0) | (counts >= 5))


class TestInputValidation:
    def test_xy_length_mismatch(self):
        from episcore.errors import LengthMismatch

        X = np.ones((5, 2))
        y = np.ones(4)
        for model in (LinearRegressor(), KnnRegressor(k=1), ObliviousBoostingRegressor()):
            with pytest.raises(LengthMismatch):
                model.fit(X, y)

    def test_non_integer_k_rejected(self):
        with pytest.raises(KTooLarge):
            KnnRegressor(k=2.5).fit(np.ones((5, 1)), np.ones(5))


class TestDeterminism:
    def test_repeated_fits_identical(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        for make in (
            lambda: LinearRegressor(),
            lambda: KnnRegressor(k=5),
            lambda: ObliviousBoostingRegressor(depth=2, num_iterations=15),
        ):
            a = make().fit(X, y).predict(X)
            b = make().fit(X, y).predict(X)
            assert np.array_equal(a, b)
