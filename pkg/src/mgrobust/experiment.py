"""End-to-end experiment runner: split, corrupt, fit, boost, measure.

Per trial and noise level the runner fits a base learner on the clean train
split and on its corrupted counterpart, post-processes both, and evaluates
per-group metrics on the test split with the decision threshold optimized
once on the clean validation split. Robustness checks always compare the
corrupted-data model against the clean-data model of the same variant, using
test rows as the evaluation-distribution sample. Trials own independent
random streams, so results are identical no matter how work is scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (
    DataAdditionSpec,
    DeletionSpec,
    LabelChangeSpec,
    data_addition,
    deletion,
    label_change,
)
from .boost import BoostConfig, BoostTrace, boost, empirical_l2
from .config import ExperimentConfig
from .dataio import dump_record, load_csv, write_jsonl
from .domain import Dataset, GroupClass, PatchedPredictor
from .learners import LearnerSpec, fit
from .metrics import GroupReport, RobustnessCheck, group_report, ma_err, optimize_gamma, robustness_check
from .rng import derive_key, stream
from .synth import synthesize


@dataclass(frozen=True)
class Splits:
    train: Dataset
    validation: Dataset
    test: Dataset
    aux: Dataset
    postprocess: Dataset


def split_dataset(data: Dataset, config, master_seed: int, trial: int) -> Splits:
    """Seeded shuffle, then contiguous slices at the cumulative fractions."""
    order = stream(master_seed, "split", trial).permutation(data.n)
    fractions = (
        config.train,
        config.validation,
        config.test,
        config.aux,
        config.postprocess,
    )
    bounds = [0]
    running = 0.0
    for fraction in fractions:
        running += fraction
        bounds.append(int(np.floor(running * data.n + 1e-9)))
    parts = [data.take(order[bounds[i] : bounds[i + 1]]) for i in range(5)]
    return Splits(*parts)


@dataclass(frozen=True)
class TrialResult:
    """Everything recorded for one (trial, noise level, model variant)."""

    trial: int
    noise_index: int
    noise_level: float
    learner: str
    variant: str
    groups: tuple[GroupReport, ...]
    robustness: tuple[RobustnessCheck, ...]
    boost_iterations: int
    train_l2: float
    test_l2: float
    train_max_abs_ma_err: float

    def to_record(self) -> dict:
        return {
            "record": "trial",
            "trial": self.trial,
            "noise_index": self.noise_index,
            "noise_level": self.noise_level,
            "learner": self.learner,
            "variant": self.variant,
            "groups": [g.to_record() for g in self.groups],
            "robustness": [c.to_record() for c in self.robustness],
            "boost_iterations": self.boost_iterations,
            "train_l2": self.train_l2,
            "test_l2": self.test_l2,
            "train_max_abs_ma_err": self.train_max_abs_ma_err,
        }


def _load_source(config: ExperimentConfig, trial: int) -> tuple[Dataset, GroupClass]:
    section = config.dataset
    if section.csv is not None:
        data, groups = load_csv(section.csv, section.label_column, section.groups)
        return data, groups
    spec = replace(section.synthetic, seed=derive_key(config.master_seed, "synth", trial))
    data = synthesize(spec)
    groups = GroupClass.parse(section.groups)
    groups.validate_against(data.schema)
    return data, groups


def _apply_attack(
    config: ExperimentConfig,
    groups: GroupClass,
    train: Dataset,
    aux: Dataset,
    level: float,
    trial: int,
    noise_index: int,
) -> Dataset:
    attack = config.attack
    seed = derive_key(config.master_seed, "attack", attack.kind, trial, noise_index)
    if attack.kind == "none":
        return train
    if attack.kind == "label_change":
        spec = LabelChangeSpec(
            target=attack.target,
            modify_group=groups[attack.modify_group],
            noise_ratio=level,
            seed=seed,
        )
        return label_change(train, spec)
    if attack.kind == "data_addition":
        spec = DataAdditionSpec(
            modify_group=groups[attack.modify_group],
            target_group=groups[attack.target_group],
            noise_factor=int(level),
            num_clusters=attack.num_clusters,
            cluster_threshold=attack.cluster_threshold,
            target=attack.target,
            seed=seed,
        )
        return data_addition(train, aux, spec)
    spec = DeletionSpec(group=groups[attack.group], fraction=level, seed=seed)
    return deletion(train, spec)


def _max_abs_ma_err(
    predictor: PatchedPredictor, data: Dataset, groups: GroupClass
) -> float:
    return max(abs(ma_err(predictor, data, g)) for g in groups)


def _variant_result(
    *,
    trial: int,
    noise_index: int,
    level: float,
    learner: LearnerSpec,
    variant: str,
    predictor: PatchedPredictor,
    clean_predictor: PatchedPredictor,
    gamma: float,
    trace: BoostTrace | None,
    train_data: Dataset,
    clean_train: Dataset,
    corrupted_train: Dataset,
    test: Dataset,
    groups: GroupClass,
    epsilon_slack: float,
) -> TrialResult:
    reports = tuple(group_report(predictor, test, g, gamma) for g in groups)
    checks = tuple(
        robustness_check(
            clean_predictor,
            predictor,
            clean_train,
            corrupted_train,
            test.features,
            groups,
            epsilon_slack,
        )
    )
    return TrialResult(
        trial=trial,
        noise_index=noise_index,
        noise_level=level,
        learner=learner.kind,
        variant=variant,
        groups=reports,
        robustness=checks,
        boost_iterations=trace.iterations if trace is not None else 0,
        train_l2=empirical_l2(predictor, train_data),
        test_l2=empirical_l2(predictor, test),
        train_max_abs_ma_err=_max_abs_ma_err(predictor, train_data, groups),
    )


def _run_trial(config: ExperimentConfig, trial: int) -> list[TrialResult]:
    data, groups = _load_source(config, trial)
    for name in (
        config.attack.modify_group,
        config.attack.target_group,
        config.attack.group,
    ):
        if name is not None:
            groups[name]  # raises on unknown group references
    splits = split_dataset(data, config.splits, config.master_seed, trial)
    boost_cfg = BoostConfig(
        epsilon=config.boost.epsilon,
        groups=groups,
        max_iterations=config.boost.max_iterations,
    )
    results: list[TrialResult] = []
    for learner in config.learners:
        clean_base = fit(learner, splits.train, data.features)
        clean_boost_data = splits.postprocess if config.boost.fresh_split else splits.train
        pp_clean, _ = boost(clean_base, clean_boost_data, boost_cfg)
        clf_clean = PatchedPredictor(clean_base)
        gamma_clf = optimize_gamma(clf_clean, splits.validation, config.metrics.gamma_grid)
        gamma_pp = optimize_gamma(pp_clean, splits.validation, config.metrics.gamma_grid)
        for noise_index, level in enumerate(config.attack.levels):
            corrupted = _apply_attack(
                config, groups, splits.train, splits.aux, level, trial, noise_index
            )
            corrupt_base = fit(learner, corrupted, data.features)
            clf_corrupt = PatchedPredictor(corrupt_base)
            boost_data = splits.postprocess if config.boost.fresh_split else corrupted
            pp_corrupt, trace = boost(corrupt_base, boost_data, boost_cfg)
            shared = dict(
                trial=trial,
                noise_index=noise_index,
                level=level,
                learner=learner,
                clean_train=splits.train,
                corrupted_train=corrupted,
                test=splits.test,
                groups=groups,
                epsilon_slack=config.metrics.epsilon_slack,
            )
            results.append(
                _variant_result(
                    variant="clf",
                    predictor=clf_corrupt,
                    clean_predictor=clf_clean,
                    gamma=gamma_clf,
                    trace=None,
                    train_data=corrupted,
                    **shared,
                )
            )
            results.append(
                _variant_result(
                    variant="clf_pp",
                    predictor=pp_corrupt,
                    clean_predictor=pp_clean,
                    gamma=gamma_pp,
                    trace=trace,
                    train_data=boost_data,
                    **shared,
                )
            )
    return results


def run_experiment(
    config: ExperimentConfig, output: str | Path | None = None
) -> tuple[dict, list[TrialResult]]:
    """Run all trials and noise levels; optionally write the results file.

    Returns the manifest record and the sorted list of trial results. The
    results file is one JSON record per line: the manifest first, then one
    record per (trial, noise level, variant, learner).
    """
    manifest = {
        "record": "manifest",
        "version": __version__,
        "config": config.to_dict(),
    }
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            chunks = list(pool.map(lambda t: _run_trial(config, t), range(config.trials)))
    else:
        chunks = [_run_trial(config, t) for t in range(config.trials)]
    results = [r for chunk in chunks for r in chunk]
    results.sort(key=lambda r: (r.trial, r.noise_index, r.variant, r.learner))
    destination = output if output is not None else config.output
    if destination is not None:
        write_jsonl(destination, [manifest] + [r.to_record() for r in results])
    return manifest, results


def results_lines(manifest: dict, results: list[TrialResult]) -> str:
    return "\n".join([dump_record(manifest)] + [dump_record(r.to_record()) for r in results]) + "\n"
