"""Batch selection from a partition: dedup, then diversity / similarity / random.

Duplicates are removed first (first occurrence wins) since identical logs add
nothing to a prompt. Diversity sampling runs greedy MAP inference on a DPP
whose kernel is the clamped cosine-similarity matrix: starting from the item
with the largest kernel diagonal (first index on ties), it keeps adding the
item with the largest log-determinant gain while that gain stays positive,
then pads with the earliest unchosen candidates to reach k. Similarity
sampling clusters candidates with a small deterministic k-means and returns
the largest group truncated to k. Random sampling draws uniformly without
replacement from a seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from logsift.partition import Partition
from logsift.vectorize import LogVector, cosine_matrix, dense, unit

# additive diagonal regularization applied before determinant computations
KERNEL_JITTER = 1e-8


@dataclass
class Batch:
    logs: list[str]
    source_partition: Partition | None = None


def dedupe(partition: Partition) -> list[str]:
    """Distinct member contents in first-occurrence order."""
    seen: set[str] = set()
    out: list[str] = []
    for record in partition.members:
        if record.content not in seen:
            seen.add(record.content)
            out.append(record.content)
    return out


def _greedy_map(kernel: np.ndarray, k: int) -> list[int]:
    """Greedy MAP subset for a DPP kernel, with index-order padding."""
    n = kernel.shape[0]
    diag = np.diag(kernel).astype(np.float64) + KERNEL_JITTER
    selected = [int(np.argmax(diag))]
    cis = np.zeros((k, n), dtype=np.float64)
    di2s = diag.copy()
    di2s[selected[0]] = -np.inf
    while len(selected) < k:
        m = len(selected) - 1
        last = selected[-1]
        # orthogonalize against the last selected item (incremental Cholesky)
        ci_last = cis[:m, last]
        d_last = sqrt(diag[last] - float(ci_last @ ci_last)) if m else sqrt(diag[last])
        eis = (kernel[last] - ci_last @ cis[:m]) / d_last
        cis[m] = eis
        di2s -= eis**2
        di2s[selected] = -np.inf
        best = int(np.argmax(di2s))
        # log-det gain is log(di2s[best]); stop once gains are non-positive
        if not di2s[best] > 1.0:
            break
        selected.append(best)
    if len(selected) < k:
        chosen = set(selected)
        selected.extend(i for i in range(n) if i not in chosen)
        selected = selected[:k]
    return selected


def dpp_sample(candidates: list[str], vectors: list[LogVector], k: int,
               seed: int = 0, partition: Partition | None = None) -> Batch:
    """Diversity batch of up to k logs; deterministic for a fixed input order
    (the seed is accepted for interface symmetry but unused)."""
    if len(candidates) != len(vectors):
        raise ValueError("candidates and vectors are misaligned")
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidates) <= k:
        return Batch(logs=list(candidates), source_partition=partition)
    kernel = cosine_matrix(vectors)
    picked = _greedy_map(kernel, k)
    return Batch(logs=[candidates[i] for i in picked], source_partition=partition)


def _kmeans_groups(points: np.ndarray, n_clusters: int,
                   max_iter: int = 100, tol: float = 1e-6) -> np.ndarray:
    n = points.shape[0]
    starts = (np.arange(n_clusters, dtype=np.int64) * n) // n_clusters
    centers = points[starts].copy()
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = (
            (points**2).sum(axis=1)[:, None]
            - 2.0 * points @ centers.T
            + (centers**2).sum(axis=1)[None, :]
        )
        assign = d2.argmin(axis=1)
        moved = 0.0
        for c in range(n_clusters):
            members = points[assign == c]
            if len(members) == 0:
                continue  # empty cluster keeps its previous center
            new_center = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new_center - centers[c])))
            centers[c] = new_center
        if moved < tol:
            break
    return assign


def similarity_sample(candidates: list[str], vectors: list[LogVector], k: int,
                      seed: int = 0, partition: Partition | None = None) -> Batch:
    """Most-similar batch: k-means with ceil(n/k) clusters, evenly spaced
    index initialization, then the largest group truncated to k."""
    if len(candidates) != len(vectors):
        raise ValueError("candidates and vectors are misaligned")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(candidates)
    if n <= k:
        return Batch(logs=list(candidates), source_partition=partition)
    points = np.stack([dense(unit(v)) for v in vectors])
    assign = _kmeans_groups(points, ceil(n / k))
    sizes = np.bincount(assign, minlength=ceil(n / k))
    largest = int(np.argmax(sizes))  # ties: lowest cluster index
    members = [candidates[i] for i in range(n) if assign[i] == largest]
    return Batch(logs=members[:k], source_partition=partition)


def random_sample(candidates: list[str], k: int, seed=0,
                  partition: Partition | None = None) -> Batch:
    """Uniform sample without replacement; deterministic for a fixed seed."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidates) <= k:
        return Batch(logs=list(candidates), source_partition=partition)
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(candidates), size=k, replace=False)
    return Batch(logs=[candidates[int(i)] for i in picked], source_partition=partition)
