"""Pairwise output-similarity matrices, agglomerative clustering, 2D layout.

Clustering is average-linkage on distance 1 - S, merged bottom-up with a
fixed tie-break (lowest candidate index pair), so results are identical
across runs and platforms. The 2D layout is classical multidimensional
scaling with a deterministic eigen ordering and sign convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .executor import EmbeddingClient, ResultTable, table_similarity


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple[int, ...]
    k: int

    def members(self, cluster_id: int) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.labels) if lab == cluster_id)


def similarity_matrix(
    tables: list[ResultTable],
    comparator: str = "table_jaccard",
    client: EmbeddingClient | None = None,
) -> np.ndarray:
    n = len(tables)
    matrix = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            s = table_similarity(tables[i], tables[j], comparator, client)
            matrix[i, j] = matrix[j, i] = s
    return matrix


def cluster(
    matrix: np.ndarray, cut: float | None = 0.3, k: int | None = None
) -> ClusterAssignment:
    """Average-linkage agglomerative clustering on distance 1 - S.

    Merges while the minimum inter-cluster distance is <= cut, or down to
    exactly k clusters when k is given. Tie-break: the merge pair whose
    (lowest, second-lowest) member indices are smallest.
    """
    n = matrix.shape[0]
    if n == 0:
        return ClusterAssignment((), 0)
    dist = 1.0 - np.asarray(matrix, dtype=float)
    clusters: list[list[int]] = [[i] for i in range(n)]

    def linkage(a: list[int], b: list[int]) -> float:
        return float(dist[np.ix_(a, b)].mean())

    while len(clusters) > 1:
        if k is not None and len(clusters) <= k:
            break
        best = None
        best_pair = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                d = linkage(clusters[i], clusters[j])
                tie = (min(clusters[i][0], clusters[j][0]), max(clusters[i][0], clusters[j][0]))
                if best is None or d < best - 1e-12 or (abs(d - best) <= 1e-12 and tie < best_pair):
                    best = d
                    best_pair = tie
                    best_ij = (i, j)
        if k is None and best > cut:
            break
        i, j = best_ij
        merged = sorted(clusters[i] + clusters[j])
        clusters = [c for idx, c in enumerate(clusters) if idx not in (i, j)]
        clusters.append(merged)

    clusters.sort(key=lambda c: c[0])
    labels = [0] * n
    for cid, members in enumerate(clusters):
        for m in members:
            labels[m] = cid
    return ClusterAssignment(tuple(labels), len(clusters))


def layout2d(matrix: np.ndarray) -> tuple[tuple[float, float], ...]:
    """Classical MDS of distance 1 - S into two dimensions.

    Coordinates are centered at the origin. Axes are ordered by descending
    eigenvalue and each axis is flipped so its first nonzero loading is
    positive; inputs that are exactly 2-embeddable are reproduced
    isometrically.
    """
    n = matrix.shape[0]
    if n == 0:
        return ()
    if n == 1:
        return ((0.0, 0.0),)
    dist = 1.0 - np.asarray(matrix, dtype=float)
    squared = dist ** 2
    centering = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * centering @ squared @ centering
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals, kind="stable")[::-1]
    coords = np.zeros((n, 2))
    axis = 0
    for idx in order:
        if axis >= 2 or eigvals[idx] <= 1e-12:
            break
        column = eigvecs[:, idx] * np.sqrt(eigvals[idx])
        for value in column:
            if abs(value) > 1e-12:
                if value < 0:
                    column = -column
                break
        coords[:, axis] = column
        axis += 1
    return tuple((float(x), float(y)) for x, y in coords)
