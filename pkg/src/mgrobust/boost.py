"""Group-auditing boost: patch a predictor until every group residual is small.

The loop audits all groups against the sample, finds the group whose mean
signed residual exceeds the tolerance by the largest margin, shifts every
member prediction by the tolerance in the correcting direction (clipping to
[0, 1]), and repeats. Each non-final iteration provably lowers the mean
squared error by at least the squared tolerance, so the loop finishes within
``ceil(1 / epsilon^2)`` iterations; the trace records enough per-iteration
state to verify both facts after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import BasePredictor, Dataset, GroupClass, GroupPredicate, Patch, PatchedPredictor
from .errors import BoostInvariantError


@dataclass(frozen=True)
class BoostConfig:
    """Tolerance, audited groups, and an optional safety cap on iterations."""

    epsilon: float
    groups: GroupClass
    max_iterations: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")

    def iteration_cap(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        # One above the provable bound; reaching it means a bug, not bad luck.
        return math.ceil(1.0 / self.epsilon**2) + 1


@dataclass(frozen=True)
class BoostStep:
    group: str
    violation: float
    sign: int
    l2_before: float
    l2_after: float

    def to_record(self) -> dict:
        return {
            "group": self.group,
            "violation": self.violation,
            "sign": self.sign,
            "l2_before": self.l2_before,
            "l2_after": self.l2_after,
        }


@dataclass(frozen=True)
class BoostTrace:
    steps: tuple[BoostStep, ...]
    initial_l2: float
    final_l2: float

    @property
    def iterations(self) -> int:
        return len(self.steps)

    def to_records(self) -> list[dict]:
        return [dict(iteration=i, **s.to_record()) for i, s in enumerate(self.steps)]


def empirical_l2(predictor: PatchedPredictor, data: Dataset) -> float:
    """Mean squared residual of the predictor on the sample."""
    if data.n == 0:
        raise ValueError("dataset must be non-empty")
    preds = predictor.predict(data.features)
    return float(np.mean((data.label_floats() - preds) ** 2))


def _group_sums(residual: np.ndarray, member_indices: list[np.ndarray]) -> np.ndarray:
    # Per-group sums via np.sum (pairwise reduction) so results are bit-stable.
    return np.array([residual[idx].sum() if idx.size else 0.0 for idx in member_indices])


def audit(
    predictor: PatchedPredictor,
    data: Dataset,
    groups: GroupClass,
    epsilon: float,
) -> tuple[GroupPredicate, float] | None:
    """Worst violating group, or None when all residual means are within eps.

    The violation of a group is the mean signed residual (prediction minus
    label, zero outside the group) over the whole sample. The group with the
    largest absolute violation strictly above ``epsilon`` is returned; ties
    break toward the earliest group in the class.
    """
    if data.n == 0:
        raise ValueError("dataset must be non-empty")
    preds = predictor.predict(data.features)
    member_indices = [np.flatnonzero(data.features.membership(g)) for g in groups]
    residual = preds - data.label_floats()
    violations = _group_sums(residual, member_indices) / data.n
    index = int(np.argmax(np.abs(violations)))
    if abs(violations[index]) <= epsilon:
        return None
    return groups.groups[index], float(violations[index])


def boost(
    base: BasePredictor,
    data: Dataset,
    config: BoostConfig,
) -> tuple[PatchedPredictor, BoostTrace]:
    """Patch ``base`` until every group's mean residual is within epsilon.

    Base predictions are computed once and patched in place as a cached
    vector; the returned predictor carries the symbolic patch list, which
    replays the identical sequence on any rows, in or out of sample.
    """
    if data.n == 0:
        raise ValueError("dataset must be non-empty")
    predictor = PatchedPredictor(base)
    working = predictor.base_predictions(data.features).copy()
    labels = data.label_floats()
    n = data.n
    eps = config.epsilon
    member_indices = [np.flatnonzero(data.features.membership(g)) for g in config.groups]
    cap = config.iteration_cap()

    initial_l2 = float(np.mean((labels - working) ** 2))
    current_l2 = initial_l2
    steps: list[BoostStep] = []
    while True:
        violations = _group_sums(working - labels, member_indices) / n
        index = int(np.argmax(np.abs(violations)))
        violation = float(violations[index])
        if abs(violation) <= eps:
            break
        if len(steps) >= cap:
            raise BoostInvariantError(
                f"boost exceeded {cap} iterations; the per-iteration loss decrease failed"
            )
        sign = 1 if violation > 0 else -1
        delta = sign * eps
        idx = member_indices[index]
        working[idx] = np.clip(working[idx] - delta, 0.0, 1.0)
        next_l2 = float(np.mean((labels - working) ** 2))
        steps.append(
            BoostStep(config.groups.groups[index].name, violation, sign, current_l2, next_l2)
        )
        predictor = predictor.with_patch(Patch(config.groups.groups[index], delta))
        current_l2 = next_l2
    return predictor, BoostTrace(tuple(steps), initial_l2, current_l2)


def required_sample_size(
    predictor_family_size: int,
    group_count: int,
    epsilon: float,
    delta: float,
) -> int:
    """Smallest sample size meeting the uniform-convergence bound.

    Evaluates ``ceil( ln(F * (2G)^(1/eps^2 + 1) / delta) / (2 eps^2) )`` where
    F is the size of the base predictor family and G the number of groups.
    """
    if predictor_family_size < 1 or group_count < 1:
        raise ValueError("family size and group count must be positive")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    exponent = 1.0 / epsilon**2 + 1.0
    log_total = (
        math.log(predictor_family_size)
        + exponent * math.log(2.0 * group_count)
        - math.log(delta)
    )
    return max(1, math.ceil(log_total / (2.0 * epsilon**2)))
