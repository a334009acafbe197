"""Experiment configuration: dataclass sections parsed from one JSON file.

Unknown keys are rejected so typos fail fast. The resolved configuration is
round-tripped into the results manifest, which is what makes a results file
reproducible from its own header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .learners import LEARNER_KINDS, LearnerSpec
from .metrics import DEFAULT_GAMMA_GRID
from .synth import GroupCell, SyntheticSpec

_FRACTION_TOL = 1e-9

ATTACK_KINDS = ("none", "label_change", "data_addition", "deletion")


@dataclass(frozen=True)
class SplitConfig:
    train: float
    validation: float
    test: float
    aux: float = 0.0
    postprocess: float = 0.0

    def __post_init__(self) -> None:
        parts = (self.train, self.validation, self.test, self.aux, self.postprocess)
        if any(p < 0 for p in parts):
            raise ConfigError("split fractions must be non-negative")
        if abs(sum(parts) - 1.0) > _FRACTION_TOL:
            raise ConfigError("split fractions must sum to 1")
        if self.train <= 0 or self.validation <= 0 or self.test <= 0:
            raise ConfigError("train, validation, and test fractions must be positive")

    def to_dict(self) -> dict:
        return {
            "train": self.train,
            "validation": self.validation,
            "test": self.test,
            "aux": self.aux,
            "postprocess": self.postprocess,
        }


@dataclass(frozen=True)
class BoostSection:
    epsilon: float = 0.01
    fresh_split: bool = False
    max_iterations: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError("boost epsilon must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "fresh_split": self.fresh_split,
            "max_iterations": self.max_iterations,
        }


@dataclass(frozen=True)
class AttackSection:
    kind: str = "none"
    levels: tuple[float, ...] = (0.0,)
    modify_group: str | None = None
    target_group: str | None = None
    group: str | None = None
    target: int | None = 0
    num_clusters: int = 10
    cluster_threshold: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if not self.levels:
            raise ConfigError("attack levels must be non-empty")
        if self.kind == "label_change" and self.modify_group is None:
            raise ConfigError("label_change requires modify_group")
        if self.kind == "data_addition":
            if self.modify_group is None or self.target_group is None:
                raise ConfigError("data_addition requires modify_group and target_group")
            for level in self.levels:
                if level != int(level) or level < 1:
                    raise ConfigError("data_addition levels must be integers >= 1")
        if self.kind == "deletion" and self.group is None:
            raise ConfigError("deletion requires group")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "levels": list(self.levels),
            "modify_group": self.modify_group,
            "target_group": self.target_group,
            "group": self.group,
            "target": self.target,
            "num_clusters": self.num_clusters,
            "cluster_threshold": self.cluster_threshold,
        }


@dataclass(frozen=True)
class MetricsConfig:
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    epsilon_slack: float = 0.05

    def __post_init__(self) -> None:
        if not self.gamma_grid:
            raise ConfigError("gamma grid must be non-empty")
        if self.epsilon_slack < 0:
            raise ConfigError("epsilon slack must be non-negative")

    def to_dict(self) -> dict:
        return {"gamma_grid": list(self.gamma_grid), "epsilon_slack": self.epsilon_slack}


@dataclass(frozen=True)
class ProbeSection:
    family_size: int = 1_000_000
    epsilon: float = 0.05
    delta: float = 0.05
    fresh_sample_size: int = 20_000

    def __post_init__(self) -> None:
        if self.family_size < 1:
            raise ConfigError("family size must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("probe delta must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("probe epsilon must be positive")

    def to_dict(self) -> dict:
        return {
            "family_size": self.family_size,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "fresh_sample_size": self.fresh_sample_size,
        }


@dataclass(frozen=True)
class DatasetSection:
    groups: tuple[str, ...]
    csv: str | None = None
    label_column: str = "label"
    synthetic: SyntheticSpec | None = None

    def __post_init__(self) -> None:
        if (self.csv is None) == (self.synthetic is None):
            raise ConfigError("dataset needs exactly one of csv or synthetic")
        if not self.groups:
            raise ConfigError("at least one group definition is required")

    def to_dict(self) -> dict:
        synthetic = None
        if self.synthetic is not None:
            synthetic = {
                "size": self.synthetic.size,
                "group_columns": list(self.synthetic.group_columns),
                "cells": [
                    {
                        "tokens": list(c.tokens),
                        "weight": c.weight,
                        "positive_rate": c.positive_rate,
                    }
                    for c in self.synthetic.cells
                ],
                "nuisance_features": self.synthetic.nuisance_features,
                "nuisance_shift": self.synthetic.nuisance_shift,
            }
        return {
            "groups": list(self.groups),
            "csv": self.csv,
            "label_column": self.label_column,
            "synthetic": synthetic,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSection
    splits: SplitConfig
    learners: tuple[LearnerSpec, ...]
    boost: BoostSection = field(default_factory=BoostSection)
    attack: AttackSection = field(default_factory=AttackSection)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    probe: ProbeSection = field(default_factory=ProbeSection)
    trials: int = 1
    master_seed: int = 0
    threads: int = 1
    output: str | None = None

    def __post_init__(self) -> None:
        if not self.learners:
            raise ConfigError("at least one learner is required")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.attack.kind == "data_addition" and self.splits.aux <= 0:
            raise ConfigError("data_addition requires a positive aux split fraction")
        if self.boost.fresh_split and self.splits.postprocess <= 0:
            raise ConfigError("fresh_split requires a positive postprocess fraction")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict(),
            "splits": self.splits.to_dict(),
            "learners": [
                {
                    "kind": s.kind,
                    "learning_rate": s.learning_rate,
                    "iterations": s.iterations,
                    "l2_penalty": s.l2_penalty,
                    "neighbors": s.neighbors,
                    "max_depth": s.max_depth,
                    "min_leaf": s.min_leaf,
                    "train_predictions": s.train_predictions,
                    "eval_predictions": s.eval_predictions,
                    "seed": s.seed,
                }
                for s in self.learners
            ],
            "boost": self.boost.to_dict(),
            "attack": self.attack.to_dict(),
            "metrics": self.metrics.to_dict(),
            "probe": self.probe.to_dict(),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "threads": self.threads,
            "output": self.output,
        }

    def override(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)


def _expect_mapping(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object")
    return value


def _build(cls, payload: dict, where: str, **converted):
    known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
    extra = set(payload) - known
    if extra:
        raise ConfigError(f"{where} has unknown keys: {sorted(extra)}")
    data = dict(payload)
    data.update(converted)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_synthetic(payload: dict) -> SyntheticSpec:
    payload = dict(payload)
    cells_raw = payload.pop("cells", None)
    if not isinstance(cells_raw, list) or not cells_raw:
        raise ConfigError("synthetic.cells must be a non-empty list")
    cells = []
    for cell in cells_raw:
        cell = _expect_mapping(cell, "synthetic cell")
        extra = set(cell) - {"tokens", "weight", "positive_rate"}
        if extra:
            raise ConfigError(f"synthetic cell has unknown keys: {sorted(extra)}")
        cells.append(
            GroupCell(tuple(cell["tokens"]), float(cell["weight"]), float(cell["positive_rate"]))
        )
    group_columns = tuple(payload.pop("group_columns", ()))
    return _build(
        SyntheticSpec,
        payload,
        "dataset.synthetic",
        cells=tuple(cells),
        group_columns=group_columns,
    )


def _parse_dataset(payload: dict) -> DatasetSection:
    payload = dict(payload)
    synthetic = payload.pop("synthetic", None)
    spec = _parse_synthetic(_expect_mapping(synthetic, "dataset.synthetic")) if synthetic else None
    groups = tuple(payload.pop("groups", ()))
    return _build(DatasetSection, payload, "dataset", groups=groups, synthetic=spec)


def _parse_attack(payload: dict) -> AttackSection:
    payload = dict(payload)
    levels = tuple(float(v) for v in payload.pop("levels", (0.0,)))
    target = payload.pop("target", 0)
    if target == "any":
        target = None
    return _build(AttackSection, payload, "attack", levels=levels, target=target)


def _parse_learner(payload: dict) -> LearnerSpec:
    spec = _build(LearnerSpec, payload, "learner")
    if spec.kind not in LEARNER_KINDS:  # unreachable; LearnerSpec validates
        raise ConfigError(f"unknown learner kind {spec.kind!r}")
    return spec


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(_expect_mapping(raw, "config"))
    dataset = _parse_dataset(_expect_mapping(raw.pop("dataset", None), "dataset"))
    splits = _build(SplitConfig, _expect_mapping(raw.pop("splits", None), "splits"), "splits")
    learners_raw = raw.pop("learners", None)
    if not isinstance(learners_raw, list) or not learners_raw:
        raise ConfigError("learners must be a non-empty list")
    learners = tuple(_parse_learner(_expect_mapping(l, "learner")) for l in learners_raw)
    boost = _build(BoostSection, raw.pop("boost", {}), "boost")
    attack = _parse_attack(raw.pop("attack", {}))
    metrics_raw = dict(raw.pop("metrics", {}))
    if metrics_raw.get("gamma_grid") is None:
        metrics_raw.pop("gamma_grid", None)
        metrics = _build(MetricsConfig, metrics_raw, "metrics")
    else:
        grid = tuple(float(v) for v in metrics_raw.pop("gamma_grid"))
        metrics = _build(MetricsConfig, metrics_raw, "metrics", gamma_grid=grid)
    probe = _build(ProbeSection, raw.pop("probe", {}), "probe")
    scalars = {}
    for key in ("trials", "master_seed", "threads", "output"):
        if key in raw:
            scalars[key] = raw.pop(key)
    if raw:
        raise ConfigError(f"config has unknown keys: {sorted(raw)}")
    return ExperimentConfig(
        dataset=dataset,
        splits=splits,
        learners=learners,
        boost=boost,
        attack=attack,
        metrics=metrics,
        probe=probe,
        **scalars,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return config_from_dict(raw)
