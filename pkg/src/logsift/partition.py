"""Density clustering of a chunk and deterministic partition scheduling.

DBSCAN runs on L2-normalized TF-IDF vectors with Euclidean distance. A point
is core when at least ``min_samples`` points (itself included) lie within
``eps``; border points attach to the first cluster that reaches them under an
ascending-index scan, and noise points become the outlier group. Clusters are
scheduled largest first so the cache fills with high-frequency templates
early; the mixed outlier group runs last, where it benefits most from the
warm cache.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from logsift.ingest import Chunk, LogRecord
from logsift.vectorize import LogVector, stack, unit

_UNVISITED = -2
NOISE = -1


@dataclass
class Partition:
    members: list[LogRecord]
    is_outlier_group: bool = False
    status: str = "pending"  # pending | parsed

    @property
    def size(self) -> int:
        return len(self.members)


def _neighbor_masks(vectors: list[LogVector], eps: float) -> np.ndarray:
    matrix = stack(vectors)
    gram = (matrix @ matrix.T).toarray()
    sq = np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
    dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    return dist2 <= eps * eps


def dbscan(vectors: list[LogVector], eps: float, min_samples: int) -> tuple[list[list[int]], list[int]]:
    """Cluster vectors; returns (clusters, outliers) as sorted index lists.

    Deterministic: clusters are numbered in order of their first-discovered
    core point, seeds expand in ascending index order, and a point flagged as
    noise is later claimed by the first cluster whose core reaches it.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    n = len(vectors)
    if n == 0:
        return [], []

    neighbors = _neighbor_masks(vectors, eps)
    counts = neighbors.sum(axis=1)
    is_core = counts >= min_samples

    labels = np.full(n, _UNVISITED, dtype=np.int64)
    cluster_id = 0
    for start in range(n):
        if labels[start] != _UNVISITED:
            continue
        if not is_core[start]:
            labels[start] = NOISE
            continue
        labels[start] = cluster_id
        seeds = deque(np.flatnonzero(neighbors[start]).tolist())
        while seeds:
            point = seeds.popleft()
            if labels[point] == NOISE:
                labels[point] = cluster_id  # border claim by first cluster
            if labels[point] != _UNVISITED:
                continue
            labels[point] = cluster_id
            if is_core[point]:
                seeds.extend(np.flatnonzero(neighbors[point]).tolist())
        cluster_id += 1

    clusters = [sorted(np.flatnonzero(labels == cid).tolist()) for cid in range(cluster_id)]
    outliers = sorted(np.flatnonzero(labels == NOISE).tolist())
    return clusters, outliers


def schedule(clusters: list[list[int]], outliers: list[int], records: list[LogRecord]) -> list[Partition]:
    """Order clusters by size descending (ties: smallest member line_id) and
    append the outlier group last; an empty outlier set yields no group."""
    keyed = sorted(
        (cluster for cluster in clusters if cluster),
        key=lambda cluster: (-len(cluster), min(records[i].line_id for i in cluster)),
    )
    partitions = [Partition(members=[records[i] for i in sorted(cluster)]) for cluster in keyed]
    if outliers:
        partitions.append(
            Partition(members=[records[i] for i in sorted(outliers)], is_outlier_group=True)
        )
    return partitions


def partition_chunk(records: list[LogRecord], vectors: list[LogVector],
                    eps: float, min_samples: int) -> list[Partition]:
    """Normalize, cluster and schedule one chunk.

    Zero vectors cannot be normalized, so they are routed straight into the
    outlier group rather than clustered.
    """
    if len(records) != len(vectors):
        raise ValueError("records and vectors are misaligned")
    nonzero = [i for i, v in enumerate(vectors) if v.norm > 0.0]
    zero = [i for i, v in enumerate(vectors) if v.norm == 0.0]
    if nonzero:
        clusters_local, noise_local = dbscan([unit(vectors[i]) for i in nonzero], eps, min_samples)
        clusters = [[nonzero[j] for j in cluster] for cluster in clusters_local]
        outliers = sorted([nonzero[j] for j in noise_local] + zero)
    else:
        clusters, outliers = [], sorted(zero)
    return schedule(clusters, outliers, records)


def passthrough_partition(chunk: Chunk, window: int) -> list[Partition]:
    """No-clustering ablation: fixed windows of ``window`` records, in order."""
    if window < 1:
        raise ValueError("window must be >= 1")
    return [
        Partition(members=chunk.records[start : start + window])
        for start in range(0, len(chunk.records), window)
    ]
