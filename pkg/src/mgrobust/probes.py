"""Diagnostic probes: mean-matching on constant-label data, convergence of
group expectations on fresh samples, and the sample-size bound.

Probe outputs are reports, not assertions: deviations are flagged against the
configured tolerance but the caller decides what failing means.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .boost import BoostConfig, boost, required_sample_size
from .config import ExperimentConfig
from .domain import Dataset, GroupClass, PatchedPredictor
from .experiment import _load_source, split_dataset
from .learners import fit
from .rng import derive_key
from .synth import synthesize


def _mean_prediction(predictor: PatchedPredictor, data: Dataset) -> float:
    if data.n == 0:
        return 0.0
    return float(predictor.predict(data.features).mean())


def _group_expectations(
    predictor: PatchedPredictor, data: Dataset, groups: GroupClass
) -> tuple[np.ndarray, np.ndarray]:
    preds = predictor.predict(data.features)
    labels = data.label_floats()
    matrix = groups.membership_matrix(data).astype(np.float64)
    return preds @ matrix / data.n, labels @ matrix / data.n


def theory_probes(config: ExperimentConfig) -> dict:
    """Run all probes for each configured learner and return one report."""
    data, groups = _load_source(config, 0)
    splits = split_dataset(data, config.splits, config.master_seed, 0)
    train = splits.train
    probe = config.probe
    boost_cfg = BoostConfig(epsilon=probe.epsilon, groups=groups)

    fresh: Dataset | None = None
    fresh_source = "none"
    if config.dataset.synthetic is not None:
        spec = replace(
            config.dataset.synthetic,
            size=probe.fresh_sample_size,
            seed=derive_key(config.master_seed, "probe-fresh"),
        )
        fresh = synthesize(spec)
        fresh_source = "synthetic"
    elif splits.test.n > 0:
        # No generative source for CSV data; the test split stands in.
        fresh = splits.test
        fresh_source = "test_split"

    learner_reports = []
    for learner in config.learners:
        zeros = train.with_labels(np.zeros(train.n, dtype=np.int8))
        ones = train.with_labels(np.ones(train.n, dtype=np.int8))
        p_zero = PatchedPredictor(fit(learner, zeros, data.features))
        p_one = PatchedPredictor(fit(learner, ones, data.features))
        mean_on_zeros = _mean_prediction(p_zero, splits.test)
        mean_gap_on_ones = 1.0 - _mean_prediction(p_one, splits.test)

        convergence = None
        if fresh is not None:
            base = fit(learner, train, data.features)
            boosted, _ = boost(base, train, boost_cfg)
            worst = 0.0
            worst_at = None
            for name, predictor in (("base", PatchedPredictor(base)), ("boosted", boosted)):
                emp_pred, emp_label = _group_expectations(predictor, train, groups)
                fresh_pred, fresh_label = _group_expectations(predictor, fresh, groups)
                for gi, group in enumerate(groups.names()):
                    for which, gap in (
                        ("prediction", abs(emp_pred[gi] - fresh_pred[gi])),
                        ("label", abs(emp_label[gi] - fresh_label[gi])),
                    ):
                        if gap > worst:
                            worst = float(gap)
                            worst_at = {"predictor": name, "group": group, "side": which}
            convergence = {
                "fresh_source": fresh_source,
                "max_deviation": worst,
                "at": worst_at,
                "tolerance": probe.epsilon,
                "within_tolerance": worst <= probe.epsilon,
            }

        learner_reports.append(
            {
                "learner": learner.kind,
                "mean_matching": {
                    "mean_prediction_on_all_zero_labels": mean_on_zeros,
                    "one_minus_mean_prediction_on_all_one_labels": mean_gap_on_ones,
                    "tolerance": probe.epsilon,
                    "within_tolerance": max(mean_on_zeros, mean_gap_on_ones) <= probe.epsilon,
                },
                "uniform_convergence": convergence,
            }
        )

    required = required_sample_size(
        probe.family_size, len(groups), probe.epsilon, probe.delta
    )
    return {
        "record": "probe",
        "learners": learner_reports,
        "sample_size": {
            "family_size": probe.family_size,
            "group_count": len(groups),
            "epsilon": probe.epsilon,
            "delta": probe.delta,
            "required": required,
            "train_size": train.n,
            "train_meets_bound": train.n >= required,
        },
    }
