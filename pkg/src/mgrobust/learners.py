"""Deterministic base learners and the external-predictions adapter.

Every learner is a pure function of (spec, dataset): hyperparameters are
fixed before seeing data, initialization is deterministic, and iteration
counts are fixed rather than convergence-tested, so refitting the same inputs
reproduces the same predictor bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import (
    ALL,
    BasePredictor,
    Dataset,
    FeatureTable,
    GroupClass,
    PatchedPredictor,
    constant_predictor,
)
from .encoding import FeatureEncoder
from .errors import ConfigError, DataError, PredictionError
from .metrics import RobustnessCheck, robustness_check

LEARNER_KINDS = (
    "constant_mean",
    "erm_two_constant",
    "logistic_regression",
    "knn",
    "decision_tree",
    "external_predictions",
)


@dataclass(frozen=True)
class LearnerSpec:
    """Learner kind plus its hyperparameters, all fixed before seeing data."""

    kind: str
    learning_rate: float = 0.1
    iterations: int = 500
    l2_penalty: float = 1e-4
    neighbors: int = 5
    max_depth: int | None = None
    min_leaf: int = 1
    train_predictions: str | None = None
    eval_predictions: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in LEARNER_KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return out


def _fit_constant_mean(data: Dataset) -> BasePredictor:
    return constant_predictor(float(data.label_floats().mean()))


def _fit_erm_two_constant(data: Dataset) -> BasePredictor:
    y = data.label_floats()
    loss_zero = float(np.mean(y**2))
    loss_one = float(np.mean((y - 1.0) ** 2))
    # Tie goes to the all-zeros predictor.
    return constant_predictor(1.0 if loss_one < loss_zero else 0.0)


def _fit_logistic_regression(spec: LearnerSpec, data: Dataset) -> BasePredictor:
    encoder = FeatureEncoder.fit(data.features)
    x = encoder.transform(data.features)
    y = data.label_floats()
    n = data.n
    weights = np.zeros(x.shape[1])
    bias = 0.0
    for _ in range(spec.iterations):
        margin = x @ weights + bias
        grad = _sigmoid(margin) - y
        weights -= spec.learning_rate * (x.T @ grad / n + spec.l2_penalty * weights)
        bias -= spec.learning_rate * float(grad.mean())

    def predictor(table: FeatureTable) -> np.ndarray:
        return _sigmoid(encoder.transform(table) @ weights + bias)

    return predictor


def _fit_knn(spec: LearnerSpec, data: Dataset) -> BasePredictor:
    if spec.neighbors < 1:
        raise ConfigError("neighbor count must be at least 1")
    encoder = FeatureEncoder.fit(data.features)
    train_x = encoder.transform(data.features)
    train_y = data.label_floats()
    k = min(spec.neighbors, data.n)

    def predictor(table: FeatureTable) -> np.ndarray:
        queries = encoder.transform(table)
        out = np.empty(table.n)
        # Chunked distance computation; the stable sort keeps equal distances
        # in train-index order, which is the tie-break rule.
        step = 512
        train_sq = (train_x**2).sum(axis=1)
        for start in range(0, table.n, step):
            block = queries[start : start + step]
            dists = (block**2).sum(axis=1)[:, None] - 2.0 * block @ train_x.T + train_sq
            nearest = np.argsort(dists, axis=1, kind="stable")[:, :k]
            out[start : start + block.shape[0]] = train_y[nearest].mean(axis=1)
        return np.clip(out, 0.0, 1.0)

    return predictor


@dataclass(frozen=True)
class _TreeNode:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(y: np.ndarray) -> float:
    if y.size == 0:
        return 0.0
    p = float(y.mean())
    return 2.0 * p * (1.0 - p)


def _grow_tree(
    x: np.ndarray, y: np.ndarray, depth: int, max_depth: int | None, min_leaf: int
) -> _TreeNode:
    value = float(y.mean())
    n = y.size
    if (max_depth is not None and depth >= max_depth) or n < 2 * min_leaf or _gini(y) == 0.0:
        return _TreeNode(value)
    parent = _gini(y)
    best_gain = 0.0
    best: tuple[int, float] | None = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        ones = np.cumsum(ys)
        total_ones = ones[-1]
        for cut in range(min_leaf, n - min_leaf + 1):
            if xs[cut - 1] == xs[cut]:
                continue
            left_p = ones[cut - 1] / cut
            right_p = (total_ones - ones[cut - 1]) / (n - cut)
            weighted = (
                cut / n * 2.0 * left_p * (1.0 - left_p)
                + (n - cut) / n * 2.0 * right_p * (1.0 - right_p)
            )
            gain = parent - weighted
            if gain > best_gain + 1e-15:
                best_gain = gain
                best = (j, float((xs[cut - 1] + xs[cut]) / 2.0))
    if best is None:
        return _TreeNode(value)
    feature, threshold = best
    mask = x[:, feature] <= threshold
    left = _grow_tree(x[mask], y[mask], depth + 1, max_depth, min_leaf)
    right = _grow_tree(x[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return _TreeNode(value, feature, threshold, left, right)


def _fit_decision_tree(spec: LearnerSpec, data: Dataset) -> BasePredictor:
    encoder = FeatureEncoder.fit(data.features)
    x = encoder.transform(data.features)
    y = data.label_floats()
    root = _grow_tree(x, y, 0, spec.max_depth, max(1, spec.min_leaf))

    def predictor(table: FeatureTable) -> np.ndarray:
        queries = encoder.transform(table)
        out = np.empty(table.n)

        def walk(node: _TreeNode, idx: np.ndarray) -> None:
            if node.is_leaf or idx.size == 0:
                out[idx] = node.value
                return
            go_left = queries[idx, node.feature] <= node.threshold
            walk(node.left, idx[go_left])
            walk(node.right, idx[~go_left])

        walk(root, np.arange(table.n))
        return out

    return predictor


def _read_prediction_file(path: str | Path) -> list[float]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"prediction file {path} does not exist")
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["prediction"]:
            raise DataError(f"prediction file {path} must have a single 'prediction' header")
        values = []
        for line_number, row in enumerate(reader, start=2):
            if len(row) != 1:
                raise DataError(f"{path}:{line_number}: expected one prediction per row")
            try:
                value = float(row[0])
            except ValueError:
                raise DataError(f"{path}:{line_number}: {row[0]!r} is not a number") from None
            if not 0.0 <= value <= 1.0:
                raise DataError(f"{path}:{line_number}: prediction {value} outside [0, 1]")
            values.append(value)
    return values


def external_predictions_learner(
    train_predictions_path: str | Path | None,
    eval_predictions_path: str | Path | None,
    train_data: Dataset | FeatureTable,
    eval_data: Dataset | FeatureTable | None = None,
) -> BasePredictor:
    """Lookup-backed predictor built from row-aligned prediction files.

    Each file holds one prediction per row of its dataset, in the dataset's
    row order. Rows are keyed by their canonical serialization; asking for a
    row absent from every supplied file is an error.
    """
    if train_predictions_path is None and eval_predictions_path is None:
        raise ConfigError("at least one prediction file is required")
    lookup: dict[str, float] = {}

    def ingest(path: str | Path, data: Dataset | FeatureTable) -> None:
        table = data.features if isinstance(data, Dataset) else data
        values = _read_prediction_file(path)
        if len(values) != table.n:
            raise DataError(
                f"prediction file {path} has {len(values)} rows, dataset has {table.n}"
            )
        for key, value in zip(table.canonical_keys(), values):
            known = lookup.get(key)
            if known is not None and known != value:
                raise DataError(f"conflicting predictions for one row in {path}")
            lookup[key] = value

    if train_predictions_path is not None:
        ingest(train_predictions_path, train_data)
    if eval_predictions_path is not None:
        if eval_data is None:
            raise ConfigError("eval predictions require the matching eval dataset")
        ingest(eval_predictions_path, eval_data)

    def predictor(table: FeatureTable) -> np.ndarray:
        out = np.empty(table.n)
        for i, key in enumerate(table.canonical_keys()):
            value = lookup.get(key)
            if value is None:
                raise PredictionError("row not present in any prediction file")
            out[i] = value
        return out

    return predictor


def fit(
    spec: LearnerSpec,
    data: Dataset,
    eval_data: Dataset | FeatureTable | None = None,
) -> BasePredictor:
    """Train the specified learner; returns a deterministic predictor.

    ``eval_data`` is only consulted by the external-predictions kind, whose
    eval file must be row-aligned with it.
    """
    if data.n == 0:
        raise DataError("cannot fit on an empty dataset")
    if spec.kind == "constant_mean":
        return _fit_constant_mean(data)
    if spec.kind == "erm_two_constant":
        return _fit_erm_two_constant(data)
    if spec.kind == "logistic_regression":
        return _fit_logistic_regression(spec, data)
    if spec.kind == "knn":
        return _fit_knn(spec, data)
    if spec.kind == "decision_tree":
        return _fit_decision_tree(spec, data)
    return external_predictions_learner(
        spec.train_predictions, spec.eval_predictions, data, eval_data
    )


@dataclass(frozen=True)
class ErmFlipOutcome:
    """Before/after predictors of the majority-constant learner and the check."""

    predictor_before: PatchedPredictor
    predictor_after: PatchedPredictor
    clean: Dataset
    corrupted: Dataset
    check: RobustnessCheck


def erm_flip_demo(n: int, flips: int, epsilon_slack: float = 0.05) -> ErmFlipOutcome:
    """Flip a handful of labels in a half-and-half sample and watch the
    majority-constant learner swing from all-zeros to all-ones.

    The dataset has ``n/2`` positive and ``n/2`` negative labels over distinct
    rows; ``flips`` zero-labels (the lowest row ids) are turned into ones. The
    returned check compares mean predictions on the full domain against the
    label-change budget, which the constant learner grossly exceeds for any
    ``flips >= 1``.
    """
    if n <= 0 or n % 2 != 0:
        raise ValueError("n must be a positive even number")
    if flips < 0 or flips > n // 2:
        raise ValueError("flips must lie in [0, n/2]")
    from .domain import NUMERIC, Schema  # local import keeps module top uncluttered

    schema = Schema(("row_id",), (NUMERIC,))
    rows = [(float(i),) for i in range(n)]
    labels = [1] * (n // 2) + [0] * (n // 2)
    clean = Dataset.from_rows(schema, rows, labels)
    corrupted_labels = list(labels)
    flipped = 0
    for i in range(n // 2, n):
        if flipped == flips:
            break
        corrupted_labels[i] = 1
        flipped += 1
    corrupted = clean.with_labels(corrupted_labels)
    before = PatchedPredictor(_fit_erm_two_constant(clean))
    after = PatchedPredictor(_fit_erm_two_constant(corrupted))
    groups = GroupClass([ALL])
    check = robustness_check(
        before, after, clean, corrupted, clean.features, groups, epsilon_slack
    )[0]
    return ErmFlipOutcome(before, after, clean, corrupted, check)
