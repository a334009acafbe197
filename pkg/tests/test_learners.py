from __future__ import annotations

import csv

import numpy as np
import pytest

from mgrobust.domain import Dataset, Schema
from mgrobust.encoding import FeatureEncoder
from mgrobust.errors import ConfigError, DataError, PredictionError
from mgrobust.learners import (
    LearnerSpec,
    erm_flip_demo,
    external_predictions_learner,
    fit,
)
from mgrobust.rng import stream


def labels_only_dataset(labels):
    schema = Schema(("i",), ("numeric",))
    rows = [(float(i),) for i in range(len(labels))]
    return Dataset.from_rows(schema, rows, labels)


class TestConstantLearners:
    def test_constant_mean(self):
        data = labels_only_dataset([1, 1, 0, 0])
        base = fit(LearnerSpec("constant_mean"), data)
        assert base(data.features).tolist() == [0.5] * 4

    def test_majority_constant_prefers_ones(self):
        data = labels_only_dataset([1, 1, 1, 0])
        base = fit(LearnerSpec("erm_two_constant"), data)
        assert base(data.features).tolist() == [1.0] * 4

    def test_majority_constant_tie_goes_to_zeros(self):
        data = labels_only_dataset([1, 1, 0, 0])
        base = fit(LearnerSpec("erm_two_constant"), data)
        assert base(data.features).tolist() == [0.0] * 4

    def test_empty_dataset_rejected(self):
        data = labels_only_dataset([1])
        empty = data.take(np.array([], dtype=int))
        with pytest.raises(DataError):
            fit(LearnerSpec("constant_mean"), empty)


def separable_dataset(n=200, seed="lr-separable"):
    rng = stream(seed)
    schema = Schema(("x",), ("numeric",))
    labels = rng.integers(0, 2, n)
    # one informative feature with a wide margin between the classes
    values = labels * 2.0 - 1.0 + rng.normal(0.0, 0.05, n)
    rows = [(float(v),) for v in values]
    return Dataset.from_rows(schema, rows, labels.tolist())


def logistic_descent_oracle(x, y, rate, iterations, penalty):
    """Plain-python mirror of the training loop, written independently."""
    weights = [0.0] * x.shape[1]
    bias = 0.0
    n = x.shape[0]
    for _ in range(iterations):
        grads_w = [0.0] * len(weights)
        grad_b = 0.0
        for i in range(n):
            z = sum(w * v for w, v in zip(weights, x[i])) + bias
            s = 1.0 / (1.0 + np.exp(-z)) if z >= 0 else np.exp(z) / (1.0 + np.exp(z))
            err = s - y[i]
            for j, v in enumerate(x[i]):
                grads_w[j] += err * v
            grad_b += err
        weights = [
            w - rate * (g / n + penalty * w) for w, g in zip(weights, grads_w)
        ]
        bias -= rate * grad_b / n
    return np.array(weights), bias


class TestLogisticRegression:
    def test_separable_confidence(self):
        data = separable_dataset()
        spec = LearnerSpec("logistic_regression", learning_rate=0.5, iterations=800)
        preds = fit(spec, data)(data.features)
        positives = preds[data.labels == 1]
        negatives = preds[data.labels == 0]
        assert positives.min() > 0.9
        assert negatives.max() < 0.1

    def test_matches_independent_descent(self):
        data = separable_dataset(n=60, seed="lr-oracle")
        spec = LearnerSpec("logistic_regression", learning_rate=0.2, iterations=60)
        preds = fit(spec, data)(data.features)
        encoder = FeatureEncoder.fit(data.features)
        x = encoder.transform(data.features)
        weights, bias = logistic_descent_oracle(
            x, data.label_floats(), 0.2, 60, spec.l2_penalty
        )
        expected = 1.0 / (1.0 + np.exp(-(x @ weights + bias)))
        assert np.max(np.abs(preds - expected)) <= 1e-8

    def test_refit_is_bit_identical(self):
        data = separable_dataset(n=80, seed="lr-determinism")
        spec = LearnerSpec("logistic_regression", iterations=50)
        first = fit(spec, data)(data.features)
        second = fit(spec, data)(data.features)
        assert np.array_equal(first, second)


class TestKnn:
    def test_k1_memorizes_distinct_rows(self):
        rng = stream("knn")
        schema = Schema(("x", "y"), ("numeric", "numeric"))
        n = 40
        rows = [(float(a), float(b)) for a, b in rng.random((n, 2))]
        labels = rng.integers(0, 2, n).tolist()
        data = Dataset.from_rows(schema, rows, labels)
        preds = fit(LearnerSpec("knn", neighbors=1), data)(data.features)
        assert np.array_equal(preds, data.label_floats())

    def test_distance_tie_breaks_by_row_index(self):
        schema = Schema(("x",), ("numeric",))
        data = Dataset.from_rows(schema, [(0.0,), (2.0,), (2.0,)], [0, 1, 0])
        # query at 2.0: rows 1 and 2 tie at distance 0; k=2 must take both,
        # k=1 must take row 1 (the lower index)
        preds = fit(LearnerSpec("knn", neighbors=1), data)(data.features)
        assert preds[1] == 1.0 and preds[2] == 1.0


class TestDecisionTree:
    def test_group_columns_yield_group_means(self):
        rng = stream("tree")
        schema = Schema(("g1", "g2"), ("categorical", "categorical"))
        n = 240
        cells = [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]
        rates = {cells[0]: 0.9, cells[1]: 0.6, cells[2]: 0.3, cells[3]: 0.1}
        rows = [cells[int(i)] for i in rng.integers(0, 4, n)]
        labels = [int(rng.random() < rates[row]) for row in rows]
        data = Dataset.from_rows(schema, rows, labels)
        preds = fit(LearnerSpec("decision_tree"), data)(data.features)
        for cell in cells:
            mask = np.array([row == cell for row in rows])
            cell_labels = np.array(labels, dtype=float)[mask]
            assert np.allclose(preds[mask], cell_labels.mean())

    def test_max_depth_zero_is_constant(self):
        data = labels_only_dataset([1, 1, 0, 0])
        preds = fit(LearnerSpec("decision_tree", max_depth=0), data)(data.features)
        assert preds.tolist() == [0.5] * 4

    def test_refit_is_bit_identical(self):
        rng = stream("tree-determinism")
        schema = Schema(("x",), ("numeric",))
        n = 100
        data = Dataset.from_rows(
            schema,
            [(float(v),) for v in rng.random(n)],
            rng.integers(0, 2, n).tolist(),
        )
        spec = LearnerSpec("decision_tree", max_depth=4)
        assert np.array_equal(fit(spec, data)(data.features), fit(spec, data)(data.features))


class TestEncoder:
    def test_unseen_token_maps_to_zero_block(self):
        schema = Schema(("tok",), ("categorical",))
        from mgrobust.domain import FeatureTable

        train = FeatureTable.from_rows(schema, [("a",), ("b",)])
        encoder = FeatureEncoder.fit(train)
        out = encoder.transform(FeatureTable.from_rows(schema, [("c",)]))
        assert out.tolist() == [[0.0, 0.0]]

    def test_minmax_scaling_from_train_only(self):
        schema = Schema(("v",), ("numeric",))
        from mgrobust.domain import FeatureTable

        train = FeatureTable.from_rows(schema, [(0.0,), (10.0,)])
        encoder = FeatureEncoder.fit(train)
        out = encoder.transform(FeatureTable.from_rows(schema, [(5.0,), (20.0,)]))
        assert out.tolist() == [[0.5], [2.0]]

    def test_constant_column_scales_to_zero(self):
        schema = Schema(("v",), ("numeric",))
        from mgrobust.domain import FeatureTable

        train = FeatureTable.from_rows(schema, [(3.0,), (3.0,)])
        out = FeatureEncoder.fit(train).transform(train)
        assert out.tolist() == [[0.0], [0.0]]


def write_predictions(path, values):
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["prediction"])
        for value in values:
            writer.writerow([value])


class TestExternalPredictions:
    def test_constant_file_behaves_like_constant_mean(self, tmp_path, four_row):
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.5] * 4)
        base = external_predictions_learner(path, None, four_row)
        assert base(four_row.features).tolist() == [0.5] * 4

    def test_out_of_range_rejected(self, tmp_path, four_row):
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.5, 0.5, 0.5, 1.3])
        with pytest.raises(DataError):
            external_predictions_learner(path, None, four_row)

    def test_unknown_row_raises_at_predict_time(self, tmp_path):
        schema = Schema(("tok",), ("categorical",))
        train = Dataset.from_rows(schema, [("a",), ("b",)], [0, 1])
        other = Dataset.from_rows(schema, [("z",)], [0])
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.2, 0.8])
        base = external_predictions_learner(path, None, train)
        with pytest.raises(PredictionError):
            base(other.features)

    def test_length_mismatch_rejected(self, tmp_path, four_row):
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.5, 0.5])
        with pytest.raises(DataError):
            external_predictions_learner(path, None, four_row)

    def test_eval_file_requires_eval_rows(self, tmp_path, four_row):
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.5] * 4)
        with pytest.raises(ConfigError):
            external_predictions_learner(None, path, four_row, None)

    def test_eval_file_extends_coverage(self, tmp_path):
        schema = Schema(("tok",), ("categorical",))
        train = Dataset.from_rows(schema, [("a",)], [0])
        fresh = Dataset.from_rows(schema, [("b",)], [1])
        train_file = tmp_path / "train.csv"
        eval_file = tmp_path / "eval.csv"
        write_predictions(train_file, [0.2])
        write_predictions(eval_file, [0.8])
        base = external_predictions_learner(train_file, eval_file, train, fresh)
        both = Dataset.from_rows(schema, [("a",), ("b",)], [0, 1])
        assert base(both.features).tolist() == [0.2, 0.8]

    def test_via_fit_dispatch(self, tmp_path):
        data = labels_only_dataset([1, 0, 1, 0])
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.1, 0.2, 0.3, 0.4])
        spec = LearnerSpec("external_predictions", train_predictions=str(path))
        preds = fit(spec, data)(data.features)
        assert preds.tolist() == [0.1, 0.2, 0.3, 0.4]

    def test_duplicate_rows_with_conflicting_values_rejected(self, tmp_path, four_row):
        path = tmp_path / "preds.csv"
        write_predictions(path, [0.1, 0.2, 0.3, 0.4])  # rows 0/1 are the same row
        with pytest.raises(DataError):
            external_predictions_learner(path, None, four_row)


class TestErmFlipDemo:
    def test_single_flip_flips_the_constant(self):
        outcome = erm_flip_demo(4, 1)
        assert outcome.predictor_before.predict(outcome.clean.features).tolist() == [0.0] * 4
        assert outcome.predictor_after.predict(outcome.clean.features).tolist() == [1.0] * 4
        assert outcome.check.group == "ALL"
        assert outcome.check.lhs == pytest.approx(1.0)
        assert outcome.check.label_term == pytest.approx(0.25)
        assert outcome.check.sym_diff_term == 0.0
        assert not outcome.check.satisfied

    def test_no_flip_is_satisfied(self):
        outcome = erm_flip_demo(4, 0)
        assert outcome.check.lhs == 0.0
        assert outcome.check.satisfied

    def test_at_scale(self):
        outcome = erm_flip_demo(1000, 1)
        assert outcome.check.lhs == pytest.approx(1.0)
        assert outcome.check.label_term == pytest.approx(0.001)
        assert not outcome.check.satisfied

    def test_too_many_flips_rejected(self):
        with pytest.raises(ValueError):
            erm_flip_demo(4, 3)

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError):
            erm_flip_demo(5, 1)


class TestDeterminismAcrossKinds:
    @pytest.mark.parametrize(
        "spec",
        [
            LearnerSpec("constant_mean"),
            LearnerSpec("erm_two_constant"),
            LearnerSpec("knn", neighbors=3),
            LearnerSpec("decision_tree", max_depth=3),
        ],
    )
    def test_fit_twice_identical(self, spec):
        rng = stream("determinism", spec.kind)
        schema = Schema(("x", "tok"), ("numeric", "categorical"))
        n = 60
        rows = [
            (float(rng.random()), str(rng.choice(["p", "q"]))) for _ in range(n)
        ]
        data = Dataset.from_rows(schema, rows, rng.integers(0, 2, n).tolist())
        probe = data.take(rng.permutation(n)[:20])
        first = fit(spec, data)(probe.features)
        second = fit(spec, data)(probe.features)
        assert np.array_equal(first, second)
