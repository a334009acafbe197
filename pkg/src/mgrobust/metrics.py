"""Per-group evaluation metrics and the two robustness inequality checks.

Sign convention: ``ma_err`` is the mean of prediction-minus-label over a
group, normalized by the full sample size. Theorems about multiaccuracy are
phrased on ``abs_ma_err``, which is convention-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    Dataset,
    FeatureTable,
    GroupClass,
    GroupPredicate,
    LabeledDistribution,
    PatchedPredictor,
    multiset_symmetric_difference,
    restricted_statistical_distance,
)
from .errors import EmptyGroupError

#: Default threshold grid: 0.00, 0.01, ..., 1.00.
DEFAULT_GAMMA_GRID: tuple[float, ...] = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class GroupReport:
    """Metrics of one predictor on one group; empty groups carry support=0."""

    group: str
    ma_err: float
    abs_ma_err: float
    accuracy: float | None
    support: int

    def to_record(self) -> dict:
        return {
            "group": self.group,
            "ma_err": self.ma_err,
            "abs_ma_err": self.abs_ma_err,
            "accuracy": self.accuracy,
            "support": self.support,
        }


@dataclass(frozen=True)
class RobustnessCheck:
    """Both sides of the per-group robustness inequality.

    ``satisfied`` holds iff lhs <= label_term + sym_diff_term + epsilon_slack.
    """

    group: str
    lhs: float
    label_term: float
    sym_diff_term: float
    epsilon_slack: float
    satisfied: bool

    def to_record(self) -> dict:
        return {
            "group": self.group,
            "lhs": self.lhs,
            "label_term": self.label_term,
            "sym_diff_term": self.sym_diff_term,
            "epsilon_slack": self.epsilon_slack,
            "satisfied": self.satisfied,
        }


def ma_err(
    predictor: PatchedPredictor,
    data: Dataset,
    group: GroupPredicate,
    normalizer: int | None = None,
) -> float:
    """Signed mean residual on a group, divided by ``normalizer`` (default n)."""
    n = data.n if normalizer is None else int(normalizer)
    if n <= 0:
        raise ValueError("normalizer must be positive")
    preds = predictor.predict(data.features)
    mask = data.features.membership(group)
    residual = (preds - data.label_floats()) * mask
    return float(residual.sum() / n)


def accuracy(
    predictor: PatchedPredictor,
    data: Dataset,
    group: GroupPredicate,
    gamma: float,
) -> float:
    """Fraction of group rows whose thresholded prediction equals the label."""
    mask = data.features.membership(group)
    support = int(mask.sum())
    if support == 0:
        raise EmptyGroupError(f"group {group.name!r} has no rows")
    preds = predictor.predict(data.features)
    hard = (preds > gamma).astype(np.int8)
    agree = (hard == data.labels) & mask
    return float(agree.sum() / support)


def optimize_gamma(
    predictor: PatchedPredictor,
    validation: Dataset,
    grid: tuple[float, ...] | None = None,
) -> float:
    """Grid value maximizing overall accuracy; ties go to the smallest value."""
    candidates = DEFAULT_GAMMA_GRID if grid is None else tuple(grid)
    if not candidates:
        raise ValueError("gamma grid must be non-empty")
    if validation.n == 0:
        raise EmptyGroupError("validation set is empty")
    preds = predictor.predict(validation.features)
    labels = validation.labels
    best_gamma = None
    best_accuracy = -1.0
    for gamma in candidates:
        value = float(np.mean((preds > gamma).astype(np.int8) == labels))
        if value > best_accuracy or (value == best_accuracy and gamma < best_gamma):
            best_accuracy = value
            best_gamma = gamma
    return float(best_gamma)


def group_report(
    predictor: PatchedPredictor,
    data: Dataset,
    group: GroupPredicate,
    gamma: float,
    normalizer: int | None = None,
) -> GroupReport:
    err = ma_err(predictor, data, group, normalizer)
    support = int(data.features.membership(group).sum())
    acc = accuracy(predictor, data, group, gamma) if support > 0 else None
    return GroupReport(group.name, err, abs(err), acc, support)


def robustness_check(
    predictor: PatchedPredictor,
    other: PatchedPredictor,
    clean: Dataset,
    corrupted: Dataset,
    eval_rows: Dataset | FeatureTable,
    groups: GroupClass,
    epsilon_slack: float,
) -> list[RobustnessCheck]:
    """Sample-pair robustness check for every group.

    The left side is the mean prediction gap between the two predictors on
    ``eval_rows`` (a sample standing in for the evaluation distribution),
    restricted to the group. The right side combines the label-sum gap and the
    multiset symmetric difference between the two samples, both normalized by
    the clean sample's size, plus the slack.
    """
    n = clean.n
    if n == 0:
        raise ValueError("clean dataset must be non-empty")
    table = eval_rows.features if isinstance(eval_rows, Dataset) else eval_rows
    preds_a = predictor.predict(table)
    preds_b = other.predict(table)
    gap = preds_a - preds_b
    labels_clean = clean.label_floats()
    labels_corrupt = corrupted.label_floats()
    checks = []
    for group in groups:
        eval_mask = table.membership(group)
        lhs = abs(float((gap * eval_mask).mean())) if table.n else 0.0
        sum_clean = float((labels_clean * clean.features.membership(group)).sum())
        sum_corrupt = float((labels_corrupt * corrupted.features.membership(group)).sum())
        label_term = abs(sum_clean - sum_corrupt) / n
        sym_diff_term = multiset_symmetric_difference(clean, corrupted, group) / n
        satisfied = lhs <= label_term + sym_diff_term + epsilon_slack
        checks.append(
            RobustnessCheck(group.name, lhs, label_term, sym_diff_term, epsilon_slack, satisfied)
        )
    return checks


def distshift_check(
    predictor: PatchedPredictor,
    other: PatchedPredictor,
    dist: LabeledDistribution,
    shifted: LabeledDistribution,
    groups: GroupClass,
    epsilon_slack: float,
    eval_rows: Dataset | FeatureTable | None = None,
) -> list[RobustnessCheck]:
    """Distribution-shift robustness check on enumerated support.

    Expectations are computed exactly over the support of the reference
    distribution, so ``eval_rows`` is accepted for signature symmetry with
    :func:`robustness_check` but is not needed.
    """
    del eval_rows
    preds_a = predictor.predict(dist.table)
    preds_b = other.predict(dist.table)
    gap = (preds_a - preds_b) * dist.probabilities
    y_ref = dist.labels.astype(np.float64) * dist.probabilities
    y_shift = shifted.labels.astype(np.float64) * shifted.probabilities
    marginal_ref = dist.marginal()
    marginal_shift = shifted.marginal()
    checks = []
    for group in groups:
        mask_ref = dist.table.membership(group)
        mask_shift = shifted.table.membership(group)
        lhs = abs(float((gap * mask_ref).sum()))
        label_term = abs(float((y_ref * mask_ref).sum()) - float((y_shift * mask_shift).sum()))
        shift_term = restricted_statistical_distance(marginal_ref, marginal_shift, group)
        satisfied = lhs <= label_term + shift_term + epsilon_slack
        checks.append(
            RobustnessCheck(group.name, lhs, label_term, shift_term, epsilon_slack, satisfied)
        )
    return checks
