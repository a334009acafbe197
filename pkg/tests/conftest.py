from __future__ import annotations

import numpy as np
import pytest

from mgrobust.domain import (
    Dataset,
    GroupClass,
    Schema,
    parse_predicate,
)


@pytest.fixture
def four_row() -> Dataset:
    """Two groups of two rows: labels 1,1 in 'a' and 0,0 in 'b'."""
    schema = Schema(("g",), ("categorical",))
    return Dataset.from_rows(schema, [("a",), ("a",), ("b",), ("b",)], [1, 1, 0, 0])


@pytest.fixture
def four_row_groups() -> GroupClass:
    return GroupClass([parse_predicate("A: g==a"), parse_predicate("B: g==b")])


def random_instance(rng: np.random.Generator, max_rows: int = 200):
    """Small random dataset with mixed columns plus a few random predicates."""
    n = int(rng.integers(1, max_rows + 1))
    schema = Schema(("u", "tok"), ("numeric", "categorical"))
    u = rng.random(n)
    tokens = rng.choice(["r", "s", "t"], size=n)
    labels = rng.integers(0, 2, size=n)
    data = Dataset.from_rows(
        schema, [(float(u[i]), str(tokens[i])) for i in range(n)], labels.tolist()
    )
    predicates = [parse_predicate("ALL")]
    for j in range(int(rng.integers(1, 5))):
        kind = rng.integers(0, 3)
        if kind == 0:
            lo = float(rng.random())
            hi = min(1.0, lo + float(rng.random()))
            predicates.append(parse_predicate(f"p{j}: u>{lo} & u<={hi}"))
        elif kind == 1:
            token = str(rng.choice(["r", "s", "t"]))
            predicates.append(parse_predicate(f"p{j}: tok=={token}"))
        else:
            token = str(rng.choice(["r", "s", "t"]))
            cut = float(rng.random())
            predicates.append(parse_predicate(f"p{j}: tok!={token} & u<={cut}"))
    return data, predicates
