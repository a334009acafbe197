"""Multigroup-robust post-processing for binary predictors.

The package turns any deterministic base learner into a predictor whose
per-group mean residuals are provably small on the sample it was patched on,
and whose per-group behavior under data corruption is bounded by the amount
of corruption inside each group. It also ships the corruption generators,
metrics, and the experiment harness used to measure those guarantees.
"""

__version__ = "0.1.0"

from .boost import BoostConfig, BoostTrace, audit, boost, empirical_l2, required_sample_size
from .domain import (
    ALL,
    Dataset,
    FeatureTable,
    GroupClass,
    GroupPredicate,
    LabeledDistribution,
    PatchedPredictor,
    RowDistribution,
    Schema,
    group_membership,
    multiset_symmetric_difference,
    parse_predicate,
    restricted_statistical_distance,
)
from .metrics import (
    GroupReport,
    RobustnessCheck,
    accuracy,
    distshift_check,
    ma_err,
    optimize_gamma,
    robustness_check,
)

__all__ = [
    "ALL",
    "BoostConfig",
    "BoostTrace",
    "Dataset",
    "FeatureTable",
    "GroupClass",
    "GroupPredicate",
    "GroupReport",
    "LabeledDistribution",
    "PatchedPredictor",
    "RobustnessCheck",
    "RowDistribution",
    "Schema",
    "accuracy",
    "audit",
    "boost",
    "distshift_check",
    "empirical_l2",
    "group_membership",
    "ma_err",
    "multiset_symmetric_difference",
    "optimize_gamma",
    "parse_predicate",
    "required_sample_size",
    "restricted_statistical_distance",
    "robustness_check",
]
