"""Corruption generators: label flips, cluster-guided data addition, deletion.

Every generator is a pure function of (inputs, seed): the seed selects an
independent counter-based random stream (see :mod:`mgrobust.rng`), so a
corrupted dataset can be regenerated exactly from its spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Dataset, FeatureTable, GroupPredicate
from .encoding import FeatureEncoder
from .errors import DataError
from .rng import stream

#: 0, 1, or None; None means labels of either value are eligible.
FlipTarget = int | None


def _eligible(labels: np.ndarray, target: FlipTarget) -> np.ndarray:
    if target is None:
        return np.ones(labels.shape, dtype=bool)
    return labels == target


@dataclass(frozen=True)
class LabelChangeSpec:
    """Flip labels inside one group, each independently with one probability."""

    target: FlipTarget
    modify_group: GroupPredicate
    noise_ratio: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise_ratio <= 1.0:
            raise ValueError("noise ratio must lie in [0, 1]")
        if self.target not in (0, 1, None):
            raise ValueError("flip target must be 0, 1, or None")


def label_change(data: Dataset, spec: LabelChangeSpec) -> Dataset:
    """Label-only corruption: rows, order, and size are unchanged.

    One uniform draw is made per row (in row order); a row flips when it is in
    the modify group, its label matches the target, and its draw falls below
    the noise ratio.
    """
    draws = stream("label_change", spec.seed).random(data.n)
    member = data.features.membership(spec.modify_group)
    flip = member & _eligible(data.labels, spec.target) & (draws < spec.noise_ratio)
    return data.with_labels(np.where(flip, 1 - data.labels, data.labels))


def kmeans(matrix: np.ndarray, k: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic Lloyd's clustering with farthest-point initialization.

    The first center is the lowest-index row; each next center is the row
    maximizing the distance to its nearest chosen center (ties to the lowest
    index). Assignment ties also break to the lowest center index. The seed
    parameter is accepted for interface stability but unused: initialization
    is fully deterministic.
    """
    del seed
    points = np.asarray(matrix, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty 2-D matrix")
    distinct = np.unique(points, axis=0).shape[0]
    if k < 1 or k > distinct:
        raise ValueError(f"k must lie in [1, {distinct}] (distinct rows)")

    centers = [points[0]]
    nearest = ((points - points[0]) ** 2).sum(axis=1)
    while len(centers) < k:
        pick = int(np.argmax(nearest))
        centers.append(points[pick])
        nearest = np.minimum(nearest, ((points - points[pick]) ** 2).sum(axis=1))
    center_matrix = np.stack(centers)

    assignments = np.full(points.shape[0], -1, dtype=np.intp)
    for _ in range(100):
        distances = ((points[:, None, :] - center_matrix[None, :, :]) ** 2).sum(axis=2)
        updated = np.argmin(distances, axis=1)
        if np.array_equal(updated, assignments):
            break
        assignments = updated
        for j in range(k):
            members = points[assignments == j]
            if members.shape[0]:  # empty clusters keep their previous center
                center_matrix[j] = members.mean(axis=0)
    return assignments, center_matrix


@dataclass(frozen=True)
class DataAdditionSpec:
    """Append label-flipped copies of modify-group rows drawn from clusters
    where the target group is well represented."""

    modify_group: GroupPredicate
    target_group: GroupPredicate
    noise_factor: int
    num_clusters: int = 10
    cluster_threshold: int = 5
    target: FlipTarget = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.noise_factor < 1:
            raise ValueError("noise factor must be at least 1")
        if self.num_clusters < 1 or self.cluster_threshold < 1:
            raise ValueError("cluster parameters must be positive")
        if self.target not in (0, 1, None):
            raise ValueError("flip target must be 0, 1, or None")


def _clustering_matrix(table: FeatureTable) -> np.ndarray:
    # Cluster on scaled numeric columns when any exist: at desk scale, one-hot
    # group columns dominate distances and make clusters group-pure, which
    # leaves no cluster containing both the target and the modify group.
    has_numeric = any(kind == "numeric" for kind in table.schema.kinds)
    encoder = FeatureEncoder.fit(table, numeric_only=has_numeric)
    return encoder.transform(table)


def data_addition(data: Dataset, aux: Dataset, spec: DataAdditionSpec) -> Dataset:
    """Cluster the held-out pool; wherever the target group clears the
    threshold, flip eligible modify-group labels and append each such row
    ``noise_factor`` times."""
    if aux.n == 0:
        raise DataError("auxiliary pool is empty")
    if data.schema != aux.schema:
        raise DataError("auxiliary pool schema does not match the dataset")
    mod = aux.features.membership(spec.modify_group)
    tgt = aux.features.membership(spec.target_group)
    if bool(np.any(mod & tgt)):
        raise DataError("modify and target groups must be disjoint")
    aux_keys = set(aux.features.canonical_keys())
    if aux_keys & set(data.features.canonical_keys()):
        raise DataError("auxiliary pool must be disjoint from the dataset")

    assignments, _ = kmeans(_clustering_matrix(aux.features), spec.num_clusters, spec.seed)
    eligible = _eligible(aux.labels, spec.target)
    additions: list[int] = []
    for cluster in range(spec.num_clusters):
        in_cluster = assignments == cluster
        if int((in_cluster & tgt).sum()) < spec.cluster_threshold:
            continue
        for index in np.flatnonzero(in_cluster & mod & eligible):
            additions.extend([int(index)] * spec.noise_factor)
    if not additions:
        return data
    injected = aux.take(additions)
    injected = injected.with_labels(1 - injected.labels)
    return data.concat(injected)


@dataclass(frozen=True)
class DeletionSpec:
    """Remove a seeded-uniform fraction of one group's rows."""

    group: GroupPredicate
    fraction: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")


def deletion(data: Dataset, spec: DeletionSpec) -> Dataset:
    """Drop ``floor(fraction * group_size)`` group rows, chosen uniformly."""
    member = np.flatnonzero(data.features.membership(spec.group))
    count = int(np.floor(spec.fraction * member.size))
    if count == 0:
        return data
    chosen = stream("deletion", spec.seed).choice(member, size=count, replace=False)
    keep = np.ones(data.n, dtype=bool)
    keep[chosen] = False
    return data.take(np.flatnonzero(keep))
