"""Datasets, subgroup predicates, and patched predictors.

The objects here are deliberately simple: a feature table is a column store
over a fixed schema, a dataset attaches binary labels, a group predicate is a
conjunction of per-column atoms, and a patched predictor is a base prediction
function plus an ordered list of signed group-wide adjustments. Everything is
immutable after construction, so instances can be shared freely across
parallel work.
"""

from __future__ import annotations

import re
import weakref
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DistributionError, PredictionError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
_KINDS = (NUMERIC, CATEGORICAL)

#: Separator used when a row is rendered to its canonical string form.
CELL_SEPARATOR = "\x1f"

_NORMALIZATION_TOL = 1e-9


def format_numeric_cell(value: float) -> str:
    """Canonical text for a numeric cell: 17 significant digits."""
    return f"{float(value):.17g}"


@dataclass(frozen=True)
class Schema:
    """Ordered column names with their kinds (numeric or categorical)."""

    columns: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.columns) != len(self.kinds):
            raise SchemaError("schema columns and kinds differ in length")
        if len(set(self.columns)) != len(self.columns):
            raise SchemaError("schema column names must be unique")
        for kind in self.kinds:
            if kind not in _KINDS:
                raise SchemaError(f"unknown column kind {kind!r}")

    def index_of(self, column: str) -> int:
        try:
            return self.columns.index(column)
        except ValueError:
            raise SchemaError(f"unknown column {column!r}") from None

    def kind_of(self, column: str) -> str:
        return self.kinds[self.index_of(column)]


class FeatureTable:
    """Immutable column store of feature rows conforming to one schema."""

    def __init__(self, schema: Schema, columns: Sequence[np.ndarray]) -> None:
        if len(columns) != len(schema.columns):
            raise SchemaError("column count does not match schema")
        sizes = {len(col) for col in columns} or {0}
        if len(sizes) > 1:
            raise SchemaError("columns have inconsistent lengths")
        stored: list[np.ndarray] = []
        for kind, col in zip(schema.kinds, columns):
            if kind == NUMERIC:
                arr = np.asarray(col, dtype=np.float64)
                if arr.size and not np.all(np.isfinite(arr)):
                    raise DataError("numeric cells must be finite")
            else:
                arr = np.asarray(col, dtype=np.str_)
            arr.setflags(write=False)
            stored.append(arr)
        self.schema = schema
        self._columns = tuple(stored)
        self.n = int(sizes.pop())
        self._keys: list[str] | None = None
        self._membership: dict[GroupPredicate, np.ndarray] = {}

    @classmethod
    def from_rows(cls, schema: Schema, rows: Sequence[Sequence[object]]) -> "FeatureTable":
        width = len(schema.columns)
        for row in rows:
            if len(row) != width:
                raise SchemaError("row length does not match schema")
        columns = [[row[j] for row in rows] for j in range(width)]
        return cls(schema, [np.asarray(c) for c in columns])

    def column(self, name: str) -> np.ndarray:
        return self._columns[self.schema.index_of(name)]

    def row(self, i: int) -> tuple:
        return tuple(
            float(col[i]) if kind == NUMERIC else str(col[i])
            for kind, col in zip(self.schema.kinds, self._columns)
        )

    def rows(self) -> list[tuple]:
        return [self.row(i) for i in range(self.n)]

    def canonical_keys(self) -> list[str]:
        """Canonical string per row: column-ordered cells, labels excluded."""
        if self._keys is None:
            rendered = []
            for kind, col in zip(self.schema.kinds, self._columns):
                if kind == NUMERIC:
                    rendered.append([format_numeric_cell(v) for v in col])
                else:
                    rendered.append([str(v) for v in col])
            self._keys = [CELL_SEPARATOR.join(cells) for cells in zip(*rendered)] if rendered else []
            if not self._columns:
                self._keys = ["" for _ in range(self.n)]
        return self._keys

    def membership(self, predicate: "GroupPredicate") -> np.ndarray:
        """Boolean membership vector, cached per predicate."""
        cached = self._membership.get(predicate)
        if cached is None:
            cached = predicate.evaluate(self)
            cached.setflags(write=False)
            self._membership[predicate] = cached
        return cached

    def take(self, indices: Sequence[int] | np.ndarray) -> "FeatureTable":
        idx = np.asarray(indices, dtype=np.intp)
        return FeatureTable(self.schema, [col[idx] for col in self._columns])

    def concat(self, other: "FeatureTable") -> "FeatureTable":
        if self.schema != other.schema:
            raise SchemaError("cannot concatenate tables with different schemas")
        return FeatureTable(
            self.schema,
            [np.concatenate([a, b]) for a, b in zip(self._columns, other._columns)],
        )


class Dataset:
    """A feature table with one binary label per row (multiset semantics)."""

    def __init__(self, features: FeatureTable, labels: Sequence[int] | np.ndarray) -> None:
        arr = np.asarray(labels)
        if arr.shape != (features.n,):
            raise DataError("labels and rows differ in length")
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise DataError("labels must be 0 or 1")
        self.features = features
        self.labels = arr.astype(np.int8)
        self.labels.setflags(write=False)

    @classmethod
    def from_rows(
        cls,
        schema: Schema,
        rows: Sequence[Sequence[object]],
        labels: Sequence[int],
    ) -> "Dataset":
        return cls(FeatureTable.from_rows(schema, rows), labels)

    @property
    def schema(self) -> Schema:
        return self.features.schema

    @property
    def n(self) -> int:
        return self.features.n

    def label_floats(self) -> np.ndarray:
        return self.labels.astype(np.float64)

    def take(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features.take(idx), self.labels[idx])

    def with_labels(self, labels: Sequence[int] | np.ndarray) -> "Dataset":
        return Dataset(self.features, labels)

    def concat(self, other: "Dataset") -> "Dataset":
        return Dataset(
            self.features.concat(other.features),
            np.concatenate([self.labels, other.labels]),
        )


def _features_of(data: "Dataset | FeatureTable") -> FeatureTable:
    return data.features if isinstance(data, Dataset) else data


# ---------------------------------------------------------------------------
# Group predicates
# ---------------------------------------------------------------------------

_NUMERIC_COMPARATORS = ("==", "!=", "<=", ">")
_CATEGORICAL_COMPARATORS = ("==", "!=")

_ATOM_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(==|!=|<=|>)\s*(.+?)\s*$")

#: Reserved predicate name for the trivially-true group.
ALL_NAME = "ALL"


@dataclass(frozen=True)
class Clause:
    """One comparison atom; the raw value string is coerced per column kind."""

    column: str
    comparator: str
    value: str


@dataclass(frozen=True)
class GroupPredicate:
    """Conjunction of clauses over feature columns; empty means every row."""

    name: str
    clauses: tuple[Clause, ...] = ()

    def is_all(self) -> bool:
        return not self.clauses

    def evaluate(self, table: FeatureTable) -> np.ndarray:
        mask = np.ones(table.n, dtype=bool)
        for clause in self.clauses:
            mask &= _evaluate_clause(clause, table)
        return mask

    def validate_against(self, schema: Schema) -> None:
        """Raise SchemaError if any clause cannot be evaluated on the schema."""
        for clause in self.clauses:
            kind = schema.kind_of(clause.column)
            _coerced_value(clause, kind)


def _coerced_value(clause: Clause, kind: str) -> float | str:
    if kind == NUMERIC:
        if clause.comparator not in _NUMERIC_COMPARATORS:
            raise SchemaError(f"comparator {clause.comparator!r} not valid for numeric column")
        try:
            value = float(clause.value)
        except ValueError:
            raise SchemaError(
                f"value {clause.value!r} is not numeric for column {clause.column!r}"
            ) from None
        if not np.isfinite(value):
            raise SchemaError(f"non-finite comparison value for column {clause.column!r}")
        return value
    if clause.comparator not in _CATEGORICAL_COMPARATORS:
        raise SchemaError(f"comparator {clause.comparator!r} not valid for categorical column")
    return clause.value


def _evaluate_clause(clause: Clause, table: FeatureTable) -> np.ndarray:
    kind = table.schema.kind_of(clause.column)
    value = _coerced_value(clause, kind)
    col = table.column(clause.column)
    if clause.comparator == "==":
        return col == value
    if clause.comparator == "!=":
        return col != value
    if clause.comparator == "<=":
        return col <= value
    return col > value


ALL = GroupPredicate(ALL_NAME, ())


def parse_predicate(text: str) -> GroupPredicate:
    """Parse ``name: col==val & col2<=num``; ``name: ALL`` is the full domain."""
    name, sep, body = text.partition(":")
    if not sep:
        name, body = text, ALL_NAME
    name = name.strip()
    body = body.strip()
    if not name:
        raise SchemaError(f"predicate {text!r} has no name")
    if body == ALL_NAME:
        return GroupPredicate(name, ())
    clauses = []
    for atom in body.split("&"):
        match = _ATOM_RE.match(atom)
        if match is None:
            raise SchemaError(f"cannot parse predicate atom {atom!r}")
        clauses.append(Clause(match.group(1), match.group(2), match.group(3)))
    return GroupPredicate(name, tuple(clauses))


class GroupClass:
    """Ordered collection of uniquely named group predicates.

    The full-domain predicate is appended as the final group whenever no
    trivially-true predicate is present, so overall accuracy-in-expectation is
    always auditable. Order is fixed and used for deterministic tie-breaking.
    """

    def __init__(self, groups: Iterable[GroupPredicate]) -> None:
        ordered = list(groups)
        names = [g.name for g in ordered]
        if len(set(names)) != len(names):
            raise SchemaError("group names must be unique")
        for group in ordered:
            if group.name == ALL_NAME and not group.is_all():
                raise SchemaError(f"the name {ALL_NAME!r} is reserved for the full domain")
        if not any(g.is_all() for g in ordered):
            ordered.append(ALL)
        self.groups = tuple(ordered)

    @classmethod
    def parse(cls, texts: Iterable[str]) -> "GroupClass":
        return cls(parse_predicate(t) for t in texts)

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, name: str) -> GroupPredicate:
        for group in self.groups:
            if group.name == name:
                return group
        raise SchemaError(f"unknown group {name!r}")

    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    def membership_matrix(self, data: "Dataset | FeatureTable") -> np.ndarray:
        table = _features_of(data)
        if not self.groups:
            return np.zeros((table.n, 0), dtype=bool)
        return np.stack([table.membership(g) for g in self.groups], axis=1)

    def validate_against(self, schema: Schema) -> None:
        for group in self.groups:
            group.validate_against(schema)


def group_membership(predicate: GroupPredicate, data: "Dataset | FeatureTable") -> np.ndarray:
    """Boolean vector: entry i is True iff row i satisfies every clause."""
    return _features_of(data).membership(predicate)


# ---------------------------------------------------------------------------
# Multiset and distribution primitives
# ---------------------------------------------------------------------------


def _key_census(table: FeatureTable, predicate: GroupPredicate) -> dict[str, tuple[int, bool]]:
    """Map canonical row key -> (multiplicity, group membership)."""
    keys = table.canonical_keys()
    member = table.membership(predicate)
    census: dict[str, tuple[int, bool]] = {}
    for i, key in enumerate(keys):
        entry = census.get(key)
        if entry is None:
            census[key] = (1, bool(member[i]))
        else:
            census[key] = (entry[0] + 1, entry[1])
    return census


def multiset_symmetric_difference(
    first: "Dataset | FeatureTable",
    second: "Dataset | FeatureTable",
    predicate: GroupPredicate,
) -> int:
    """Total multiplicity disagreement between two row multisets inside a group.

    Rows are identified by their canonical serialization; labels are ignored.
    """
    table_a = _features_of(first)
    table_b = _features_of(second)
    if table_a.schema != table_b.schema:
        raise SchemaError("symmetric difference requires matching schemas")
    census_a = _key_census(table_a, predicate)
    census_b = _key_census(table_b, predicate)
    total = 0
    for key, (count_a, member) in census_a.items():
        count_b = census_b[key][0] if key in census_b else 0
        if member:
            total += abs(count_a - count_b)
    for key, (count_b, member) in census_b.items():
        if key not in census_a and member:
            total += count_b
    return total


class RowDistribution:
    """Discrete distribution over feature rows; duplicate rows merge mass."""

    def __init__(self, table: FeatureTable, probabilities: Sequence[float] | np.ndarray) -> None:
        probs = np.asarray(probabilities, dtype=np.float64)
        if probs.shape != (table.n,):
            raise DistributionError("probabilities and rows differ in length")
        if probs.size == 0:
            raise DistributionError("distribution must have non-empty support")
        if np.any(probs < 0):
            raise DistributionError("probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > _NORMALIZATION_TOL:
            raise DistributionError("probabilities must sum to 1")
        keys = table.canonical_keys()
        merged: dict[str, int] = {}
        keep: list[int] = []
        mass: list[float] = []
        for i, key in enumerate(keys):
            slot = merged.get(key)
            if slot is None:
                merged[key] = len(keep)
                keep.append(i)
                mass.append(float(probs[i]))
            else:
                mass[slot] += float(probs[i])
        self.support = table.take(keep)
        self.probabilities = np.asarray(mass, dtype=np.float64)
        self.probabilities.setflags(write=False)

    def mass_by_key(self) -> dict[str, float]:
        return dict(zip(self.support.canonical_keys(), self.probabilities))


class LabeledDistribution:
    """Discrete distribution over (feature row, binary label) pairs."""

    def __init__(
        self,
        table: FeatureTable,
        labels: Sequence[int] | np.ndarray,
        probabilities: Sequence[float] | np.ndarray,
    ) -> None:
        label_arr = np.asarray(labels)
        probs = np.asarray(probabilities, dtype=np.float64)
        if label_arr.shape != (table.n,) or probs.shape != (table.n,):
            raise DistributionError("labels, probabilities, and rows differ in length")
        if probs.size == 0:
            raise DistributionError("distribution must have non-empty support")
        if label_arr.size and not np.all((label_arr == 0) | (label_arr == 1)):
            raise DistributionError("labels must be 0 or 1")
        if np.any(probs < 0):
            raise DistributionError("probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > _NORMALIZATION_TOL:
            raise DistributionError("probabilities must sum to 1")
        self.table = table
        self.labels = label_arr.astype(np.int8)
        self.probabilities = probs
        self.probabilities.setflags(write=False)

    def marginal(self) -> RowDistribution:
        return RowDistribution(self.table, self.probabilities)


def restricted_statistical_distance(
    first: RowDistribution,
    second: RowDistribution,
    predicate: GroupPredicate,
) -> float:
    """L1 distance between two row distributions, summed inside one group."""
    if first.support.schema != second.support.schema:
        raise SchemaError("distributions must share a schema")
    mass_a = first.mass_by_key()
    mass_b = second.mass_by_key()
    member_a = first.support.membership(predicate)
    member_b = second.support.membership(predicate)
    member: dict[str, bool] = {}
    for key, flag in zip(first.support.canonical_keys(), member_a):
        member[key] = bool(flag)
    for key, flag in zip(second.support.canonical_keys(), member_b):
        member.setdefault(key, bool(flag))
    total = 0.0
    for key, in_group in member.items():
        if in_group:
            total += abs(mass_a.get(key, 0.0) - mass_b.get(key, 0.0))
    return total


# ---------------------------------------------------------------------------
# Patched predictors
# ---------------------------------------------------------------------------

BasePredictor = Callable[[FeatureTable], np.ndarray]

# Base predictions per (table, base function). Tables are immutable, so the
# cache is sound; weak keys let tables be collected normally.
_BASE_PREDICTION_CACHE: "weakref.WeakKeyDictionary[FeatureTable, dict]" = (
    weakref.WeakKeyDictionary()
)


@dataclass(frozen=True)
class Patch:
    """One group-wide adjustment: members get ``value - delta``, then clip."""

    group: GroupPredicate
    delta: float


class PatchedPredictor:
    """A base predictor with an ordered list of clipped group patches.

    Patches are applied in order; after each one, affected entries are clipped
    back into [0, 1]. Clipping after every step (rather than once at the end)
    is order-sensitive and required so any evaluation replays the exact
    sequence the patches were created under.
    """

    def __init__(self, base: BasePredictor, patches: Sequence[Patch] = ()) -> None:
        self.base = base
        self.patches = tuple(patches)

    def with_patch(self, patch: Patch) -> "PatchedPredictor":
        return PatchedPredictor(self.base, self.patches + (patch,))

    def base_predictions(self, data: "Dataset | FeatureTable") -> np.ndarray:
        table = _features_of(data)
        per_base = _BASE_PREDICTION_CACHE.setdefault(table, {})
        cached = per_base.get(self.base)
        if cached is not None:
            return cached
        preds = np.asarray(self.base(table), dtype=np.float64)
        if preds.shape != (table.n,):
            raise PredictionError("base predictor returned wrong shape")
        if preds.size and (preds.min() < 0.0 or preds.max() > 1.0):
            raise PredictionError("base predictor emitted values outside [0, 1]")
        preds.setflags(write=False)
        per_base[self.base] = preds
        return preds

    def predict(self, data: "Dataset | FeatureTable") -> np.ndarray:
        table = _features_of(data)
        preds = self.base_predictions(table).copy()
        for patch in self.patches:
            mask = table.membership(patch.group)
            preds[mask] = np.clip(preds[mask] - patch.delta, 0.0, 1.0)
        preds.setflags(write=False)
        return preds


def constant_predictor(value: float) -> BasePredictor:
    """Base predictor that outputs the same value for every row."""
    if not 0.0 <= value <= 1.0:
        raise PredictionError("constant prediction must lie in [0, 1]")

    def predict(table: FeatureTable) -> np.ndarray:
        return np.full(table.n, float(value))

    return predict


def predict(predictor: PatchedPredictor, data: "Dataset | FeatureTable") -> np.ndarray:
    """Functional alias for ``predictor.predict(data)``."""
    return predictor.predict(data)
