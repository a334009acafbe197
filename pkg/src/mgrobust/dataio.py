"""CSV ingestion/export and JSON-lines results files.

Results files are written with sorted keys and compact separators so that a
rerun of the same configuration produces byte-identical output.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

from .domain import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    GroupClass,
    Schema,
    format_numeric_cell,
)
from .errors import DataError


def _parse_number(token: str) -> float | None:
    try:
        value = float(token)
    except ValueError:
        return None
    if math.isnan(value) or math.isinf(value):
        return None
    return value


def load_csv(
    path: str | Path,
    label_column: str,
    group_defs: Iterable[str],
) -> tuple[Dataset, GroupClass]:
    """Read a headed CSV into a typed dataset plus its parsed group class.

    Column kinds are inferred: numeric when every cell parses as a finite
    number, categorical otherwise. Row order follows the file. The label
    column must contain only 0 and 1.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file {path} does not exist")
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        rows = [row for row in reader]
    if not rows:
        raise DataError(f"{path} has a header but no rows")
    if label_column not in header:
        raise DataError(f"label column {label_column!r} not found in {path}")
    if len(set(header)) != len(header):
        raise DataError(f"{path} has duplicate column names")
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{i}: expected {len(header)} cells")

    label_at = header.index(label_column)
    labels = []
    for i, row in enumerate(rows, start=2):
        value = _parse_number(row[label_at].strip())
        if value not in (0.0, 1.0):
            raise DataError(f"{path}:{i}: label {row[label_at]!r} is not binary")
        labels.append(int(value))

    feature_names = [name for j, name in enumerate(header) if j != label_at]
    feature_cells = [
        [row[j].strip() for j, name in enumerate(header) if j != label_at] for row in rows
    ]
    kinds = []
    for j, _ in enumerate(feature_names):
        parsed = [_parse_number(cells[j]) for cells in feature_cells]
        kinds.append(NUMERIC if all(v is not None for v in parsed) else CATEGORICAL)
    schema = Schema(tuple(feature_names), tuple(kinds))
    typed_rows = [
        tuple(
            float(cell) if kind == NUMERIC else cell
            for cell, kind in zip(cells, kinds)
        )
        for cells in feature_cells
    ]
    dataset = Dataset.from_rows(schema, typed_rows, labels)
    groups = GroupClass.parse(group_defs)
    groups.validate_against(schema)
    return dataset, groups


def save_csv(data: Dataset, path: str | Path, label_column: str = "label") -> None:
    """Write a dataset back to CSV in schema order, label column last."""
    path = Path(path)
    schema = data.schema
    if label_column in schema.columns:
        raise DataError(f"label column {label_column!r} collides with a feature column")
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(schema.columns) + [label_column])
        for i in range(data.n):
            cells = [
                format_numeric_cell(value) if kind == NUMERIC else str(value)
                for value, kind in zip(data.features.row(i), schema.kinds)
            ]
            writer.writerow(cells + [str(int(data.labels[i]))])


def dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for record in records:
            handle.write(dump_record(record))
            handle.write("\n")


def read_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"results file {path} does not exist")
    records = []
    with path.open() as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
