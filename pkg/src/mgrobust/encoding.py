"""Feature encoding: one-hot categoricals plus min-max scaled numerics.

Encoders are fit on one reference table (normally the training split) and
reused everywhere, so encoded geometry is identical across splits. Tokens not
seen at fit time map to the all-zero row of their one-hot block.
"""

from __future__ import annotations

import numpy as np

from .domain import CATEGORICAL, NUMERIC, FeatureTable
from .errors import DataError


class FeatureEncoder:
    def __init__(
        self,
        schema,
        vocabularies: dict[str, tuple[str, ...]],
        numeric_ranges: dict[str, tuple[float, float]],
        numeric_only: bool = False,
    ) -> None:
        self.schema = schema
        self.vocabularies = vocabularies
        self.numeric_ranges = numeric_ranges
        self.numeric_only = numeric_only

    @classmethod
    def fit(cls, table: FeatureTable, numeric_only: bool = False) -> "FeatureEncoder":
        if table.n == 0:
            raise DataError("cannot fit an encoder on an empty table")
        vocabularies: dict[str, tuple[str, ...]] = {}
        numeric_ranges: dict[str, tuple[float, float]] = {}
        for name, kind in zip(table.schema.columns, table.schema.kinds):
            if kind == NUMERIC:
                col = table.column(name)
                numeric_ranges[name] = (float(col.min()), float(col.max()))
            elif not numeric_only:
                vocabularies[name] = tuple(sorted(set(table.column(name).tolist())))
        return cls(table.schema, vocabularies, numeric_ranges, numeric_only)

    @property
    def width(self) -> int:
        total = len(self.numeric_ranges)
        total += sum(len(v) for v in self.vocabularies.values())
        return total

    def transform(self, table: FeatureTable) -> np.ndarray:
        if table.schema != self.schema:
            raise DataError("table schema does not match the fitted encoder")
        blocks: list[np.ndarray] = []
        for name, kind in zip(self.schema.columns, self.schema.kinds):
            if kind == NUMERIC:
                low, high = self.numeric_ranges[name]
                col = table.column(name)
                if high > low:
                    blocks.append(((col - low) / (high - low))[:, None])
                else:
                    blocks.append(np.zeros((table.n, 1)))
            elif kind == CATEGORICAL and not self.numeric_only:
                vocab = self.vocabularies[name]
                col = table.column(name)
                block = np.zeros((table.n, len(vocab)))
                for j, token in enumerate(vocab):
                    block[:, j] = col == token
                blocks.append(block)
        if not blocks:
            return np.zeros((table.n, 0))
        return np.concatenate(blocks, axis=1)
