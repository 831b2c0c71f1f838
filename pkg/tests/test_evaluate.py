import numpy as np
import pytest

from episcore.errors import EmptyInput, KOutOfRange, KTooLarge, LengthMismatch
from episcore.evaluate import (
    GridSpec,
    ModelSpec,
    TestReport,
    cross_validate,
    evaluate_holdout,
    grid_search,
    kfold_indices,
    rmse,
    select_best,
)
from episcore.features import FeatureTable


def table_from(X, y, ids=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    ids = ids or tuple(f"R{i:03d}" for i in range(len(y)))
    names = tuple(f"f{j}" for j in range(X.shape[1]))
    return FeatureTable(row_ids=tuple(ids), column_names=names, X=X, y=y)


def random_table(n=40, f=3, seed=0, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 10, size=(n, f))
    y = X.sum(axis=1) + rng.normal(0, noise, n)
    return table_from(X, y)


class TestRmse:
    def test_identity(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_computed(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5), abs=1e-6)

    def test_single_element(self):
        assert rmse([1.5], [1.0]) == pytest.approx(0.5)

    def test_symmetry_and_shift_invariance(self):
        rng = np.random.default_rng(0)
        p = rng.normal(size=20)
        t = rng.normal(size=20)
        assert rmse(p, t) == rmse(t, p)
        assert rmse(p + 3.7, t + 3.7) == pytest.approx(rmse(p, t), abs=1e-12)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            rmse([1.0], [1.0, 2.0])
        with pytest.raises(EmptyInput):
            rmse([], [])


class TestKfoldIndices:
    def test_paper_fold_sizes(self):
        plan = kfold_indices(132, 10, seed=1)
        sizes = sorted(len(f) for f in plan.folds)
        assert sizes == [13] * 8 + [14] * 2

    def test_singleton_folds(self):
        plan = kfold_indices(10, 10, seed=1)
        assert all(len(f) == 1 for f in plan.folds)

    def test_deterministic(self):
        assert kfold_indices(4, 2, seed=9) == kfold_indices(4, 2, seed=9)

    def test_partition(self):
        plan = kfold_indices(37, 5, seed=2)
        flat = sorted(i for fold in plan.folds for i in fold)
        assert flat == list(range(37))
        sizes = [len(f) for f in plan.folds]
        assert max(sizes) - min(sizes) <= 1

    def test_extra_elements_go_to_first_folds(self):
        plan = kfold_indices(11, 3, seed=0)
        assert [len(f) for f in plan.folds] == [4, 4, 3]

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRange):
            kfold_indices(5, 1, seed=0)
        with pytest.raises(KOutOfRange):
            kfold_indices(5, 6, seed=0)


class TestCrossValidate:
    def test_constant_target_linear_is_zero(self):
        rng = np.random.default_rng(1)
        table = table_from(rng.normal(size=(20, 2)), np.full(20, 7.0))
        plan = kfold_indices(20, 5, seed=3)
        result = cross_validate(ModelSpec("linear"), table, plan)
        assert result.mean_rmse == pytest.approx(0.0, abs=1e-9)

    def test_mean_std_recomputable(self):
        table = random_table()
        plan = kfold_indices(table.n_rows, 5, seed=4)
        result = cross_validate(ModelSpec("knn", {"k": 3}), table, plan)
        assert result.mean_rmse == pytest.approx(np.mean(result.per_fold_rmse))
        assert result.std_rmse == pytest.approx(np.std(result.per_fold_rmse, ddof=1))

    def test_fold_scalers_fitted_on_training_rows_only(self):
        table = random_table(n=20)
        plan = kfold_indices(20, 4, seed=5)
        result = cross_validate(ModelSpec("linear"), table, plan)
        for fold, scaler in zip(plan.folds, result.fold_scalers):
            fitted = set(scaler.fitted_on)
            assert fitted.isdisjoint(fold)
            assert fitted | set(fold) == set(range(20))

    def test_row_shuffle_with_plan_remap_is_invariant(self):
        table = random_table(n=24, seed=6)
        plan = kfold_indices(24, 4, seed=7)
        base = cross_validate(ModelSpec("linear"), table, plan)

        rng = np.random.default_rng(8)
        perm = rng.permutation(24)
        position = np.empty(24, dtype=int)
        position[perm] = np.arange(24)
        shuffled = table.subset(perm)
        remapped = kfold_indices(24, 4, seed=7).__class__(
            n=24, k=4, seed=7,
            folds=tuple(tuple(int(position[j]) for j in fold) for fold in plan.folds),
        )
        again = cross_validate(ModelSpec("linear"), shuffled, remapped)
        assert np.allclose(base.per_fold_rmse, again.per_fold_rmse, atol=1e-10)

    def test_leave_one_out_interpolating_model_is_exact(self):
        rng = np.random.default_rng(9)
        distinct = rng.uniform(0, 5, size=(12, 2))
        X = np.vstack([distinct, distinct])  # every point has an exact twin
        y = np.concatenate([distinct.sum(axis=1)] * 2)
        table = table_from(X, y)
        plan = kfold_indices(24, 24, seed=10)
        result = cross_validate(ModelSpec("knn", {"k": 1}), table, plan)
        assert result.mean_rmse == 0.0

    def test_plan_size_mismatch(self):
        table = random_table(n=10)
        with pytest.raises(LengthMismatch):
            cross_validate(ModelSpec("linear"), table, kfold_indices(8, 2, seed=0))

    def test_model_error_annotated_with_fold(self):
        table = random_table(n=8)
        plan = kfold_indices(8, 2, seed=0)
        with pytest.raises(KTooLarge) as err:
            cross_validate(ModelSpec("knn", {"k": 100}), table, plan)
        assert "fold 0" in str(err.value)


class TestGridSearch:
    def test_single_point_grid(self):
        table = random_table(n=20)
        plan = kfold_indices(20, 4, seed=1)
        grid = GridSpec.from_dict({"k": [3]})
        best, results = grid_search("knn", grid, table, plan)
        assert best == {"k": 3}
        assert len(results) == 1

    def test_noisy_smooth_data_prefers_k_above_one(self):
        table = random_table(n=60, f=3, seed=2, noise=1.0)
        plan = kfold_indices(60, 10, seed=3)
        grid = GridSpec.from_dict({"k": list(range(1, 17))})
        best, results = grid_search("knn", grid, table, plan)
        assert best["k"] > 1
        assert len(results) == 16

    def test_best_not_worse_than_any_result(self):
        table = random_table(n=30, seed=4)
        plan = kfold_indices(30, 5, seed=5)
        grid = GridSpec.from_dict({"k": [1, 3, 5, 7]})
        best, results = grid_search("knn", grid, table, plan)
        best_result = next(r for r in results if r.spec.params == best)
        assert all(best_result.mean_rmse <= r.mean_rmse for r in results)

    def test_points_enumerate_in_axis_order(self):
        grid = GridSpec.from_dict({"a": [1, 2], "b": [10, 20]})
        assert list(grid.points()) == [
            {"a": 1, "b": 10}, {"a": 1, "b": 20}, {"a": 2, "b": 10}, {"a": 2, "b": 20},
        ]


class TestEvaluateHoldout:
    def test_duplicated_points_k1_zero_rmse(self):
        rng = np.random.default_rng(6)
        distinct = rng.uniform(size=(10, 2))
        X = np.vstack([distinct, distinct])
        y = np.concatenate([rng.normal(size=10)] * 2)
        table = table_from(X, y)
        report = evaluate_holdout(
            ModelSpec("knn", {"k": 1}), table, (np.arange(10), np.arange(10, 20))
        )
        assert report.holdout_rmse == 0.0

    def test_report_recomputable_from_predictions(self):
        table = random_table(n=30, seed=7)
        report = evaluate_holdout(ModelSpec("linear"), table, (np.arange(24), np.arange(24, 30)))
        truths = np.array([t for _, t, _ in report.predictions])
        preds = np.array([p for _, _, p in report.predictions])
        assert report.holdout_rmse == pytest.approx(rmse(preds, truths))
        assert report.residual_std == pytest.approx(np.std(truths - preds, ddof=1))

    def test_overlapping_split_rejected(self):
        table = random_table(n=10)
        with pytest.raises(ValueError):
            evaluate_holdout(ModelSpec("linear"), table, (np.arange(6), np.arange(5, 10)))


class TestSelectBest:
    @staticmethod
    def report(kind, holdout, std):
        return TestReport(
            spec=ModelSpec(kind), holdout_rmse=holdout, residual_std=std, predictions=()
        )

    def test_near_tie_resolved_by_residual_std(self):
        linear = self.report("linear", 0.5435, 0.3665)
        knn = self.report("knn", 0.5946, 0.3725)
        boosted = self.report("boosted", 0.5506, 0.3327)
        assert select_best([linear, knn, boosted]).spec.kind == "boosted"

    def test_clear_winner_by_rmse(self):
        a = self.report("linear", 0.40, 0.9)
        b = self.report("boosted", 0.60, 0.1)
        assert select_best([a, b]).spec.kind == "linear"
