"""Synthetic tabular data with named subgroup cells and label signal.

One row is drawn per sample: a cell (a tuple of categorical tokens, one per
group column) selected by the cell weights, a label from the cell's positive
rate, and nuisance numeric features from a label-conditional Gaussian
(mean ``+shift/2`` for positive rows, ``-shift/2`` for negative rows, unit
variance), so a linear model in the numeric features recovers signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import CATEGORICAL, NUMERIC, Dataset, FeatureTable, Schema
from .errors import ConfigError
from .rng import stream

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class GroupCell:
    tokens: tuple[str, ...]
    weight: float
    positive_rate: float


@dataclass(frozen=True)
class SyntheticSpec:
    size: int
    group_columns: tuple[str, ...]
    cells: tuple[GroupCell, ...]
    nuisance_features: int = 2
    nuisance_shift: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ConfigError("synthetic size must be positive")
        if not self.cells:
            raise ConfigError("at least one cell is required")
        if abs(sum(c.weight for c in self.cells) - 1.0) > _WEIGHT_TOL:
            raise ConfigError("cell weights must sum to 1")
        for cell in self.cells:
            if len(cell.tokens) != len(self.group_columns):
                raise ConfigError("cell tokens must match the group columns")
            if not 0.0 <= cell.positive_rate <= 1.0:
                raise ConfigError("positive rates must lie in [0, 1]")
            if cell.weight < 0.0:
                raise ConfigError("cell weights must be non-negative")
        if self.nuisance_features < 0:
            raise ConfigError("nuisance feature count must be non-negative")

    def schema(self) -> Schema:
        columns = tuple(self.group_columns) + tuple(
            f"x{j}" for j in range(self.nuisance_features)
        )
        kinds = (CATEGORICAL,) * len(self.group_columns) + (NUMERIC,) * self.nuisance_features
        return Schema(columns, kinds)


def synthesize(spec: SyntheticSpec) -> Dataset:
    """Sample a dataset from the spec; the same spec yields the same bytes."""
    rng = stream("synth", spec.seed)
    weights = np.array([c.weight for c in spec.cells])
    rates = np.array([c.positive_rate for c in spec.cells])
    cell_index = rng.choice(len(spec.cells), size=spec.size, p=weights / weights.sum())
    labels = (rng.random(spec.size) < rates[cell_index]).astype(np.int8)
    offsets = (labels.astype(np.float64) - 0.5) * spec.nuisance_shift
    nuisance = rng.normal(size=(spec.size, spec.nuisance_features)) + offsets[:, None]

    columns: list[np.ndarray] = []
    for position in range(len(spec.group_columns)):
        tokens = np.array([c.tokens[position] for c in spec.cells])
        columns.append(tokens[cell_index])
    for j in range(spec.nuisance_features):
        columns.append(nuisance[:, j])
    return Dataset(FeatureTable(spec.schema(), columns), labels)


def census_like_cells(
    first_rate: float = 0.71,
    second_rate: float = 0.507,
    positive_rates: tuple[float, float, float, float] = (0.45, 0.32, 0.28, 0.22),
) -> tuple[tuple[str, ...], tuple[GroupCell, ...]]:
    """Two binary group columns crossed into four cells with product weights.

    Default marginals and positive-rate spread are in the ballpark of public
    income-survey tables, which keeps experiment configs realistic without
    shipping data.
    """
    columns = ("grp_a", "grp_b")
    weights = (
        first_rate * second_rate,
        first_rate * (1 - second_rate),
        (1 - first_rate) * second_rate,
        (1 - first_rate) * (1 - second_rate),
    )
    tokens = (("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2"))
    cells = tuple(
        GroupCell(tok, w, r) for tok, w, r in zip(tokens, weights, positive_rates)
    )
    return columns, cells
