"""DBSCAN over failure messages with normalized edit distance."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

from ..core import FailureRecord
from .distance import edit_distance, normalized_distance

T = TypeVar("T")
NOISE = -1


@dataclass(frozen=True)
class FailureCluster:
    id: str
    members: tuple[FailureRecord, ...]
    medoid: FailureRecord

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("cluster has no members")
        if self.medoid not in self.members:
            raise ValueError("medoid must be a member")

    @property
    def size(self) -> int:
        return len(self.members)


def pairwise(points: Sequence[T], dist: Callable[[T, T], float]) -> list[list[float]]:
    n = len(points)
    m = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            m[i][j] = m[j][i] = dist(points[i], points[j])
    return m


def dbscan_labels(matrix: Sequence[Sequence[float]], eps: float, min_pts: int) -> list[int]:
    """Cluster label per point (``NOISE`` for noise), from a distance matrix.

    Points are visited in input order and clusters numbered in creation
    order. A border point joins the first cluster that reaches it and is
    never reassigned. Neighbourhoods include the point itself.
    """
    n = len(matrix)
    neighbours = [[j for j in range(n) if matrix[i][j] <= eps] for i in range(n)]
    labels: list[int | None] = [None] * n
    cluster = 0
    for i in range(n):
        if labels[i] is not None:
            continue
        if len(neighbours[i]) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        frontier = deque(j for j in neighbours[i] if j != i)
        while frontier:
            j = frontier.popleft()
            if labels[j] == NOISE:
                labels[j] = cluster
                continue
            if labels[j] is not None:
                continue
            labels[j] = cluster
            if len(neighbours[j]) >= min_pts:
                frontier.extend(neighbours[j])
        cluster += 1
    return [NOISE if lab is None else lab for lab in labels]


def medoid_index(indices: Sequence[int], matrix: Sequence[Sequence[float]]) -> int:
    """Member minimizing the summed distance to the others; earliest wins ties."""
    return min(indices, key=lambda i: (sum(matrix[i][j] for j in indices), i))


def cluster_failures(
    failures: Sequence[FailureRecord], eps: float = 0.3, min_pts: int = 2, id_prefix: str = "c"
) -> list[FailureCluster]:
    """Group failures by their normalized error text.

    Noise points become singleton clusters so every failure stays
    addressable. Clusters are ordered by their earliest member.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    if not failures:
        return []
    texts = [f.normalized_error for f in failures]
    matrix = pairwise(texts, normalized_distance)
    labels = dbscan_labels(matrix, eps, min_pts)
    groups: dict[object, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(("noise", i) if lab == NOISE else lab, []).append(i)
    ordered = sorted(groups.values(), key=lambda idx: idx[0])
    out = []
    for k, idx in enumerate(ordered):
        m = medoid_index(idx, matrix)
        out.append(FailureCluster(f"{id_prefix}{k}", tuple(failures[i] for i in idx), failures[m]))
    return out


def select_reflection_examples(cluster: FailureCluster, k: int = 3) -> list[FailureRecord]:
    """The ``k`` members closest to the medoid by edit distance, ties by member order."""
    center = cluster.medoid.normalized_error
    medoid = cluster.members.index(cluster.medoid)
    ranked = sorted(
        range(cluster.size),
        key=lambda i: (edit_distance(cluster.members[i].normalized_error, center), i != medoid, i),
    )
    return [cluster.members[i] for i in ranked[:k]]
