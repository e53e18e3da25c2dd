"""TF-IDF log vectors and cosine geometry.

Each log L of N tokens maps to a sparse vector over the chunk vocabulary:

    entry(t) = (1/N) * TF(t) * IDF(t)
             = (1/N) * (count(t)/N) * ln(total_logs / doc_freq(t))

i.e. the distinct-token sum of one-hot basis vectors weighted by TF-IDF,
with the 1/N prefactor applied once over the whole sum. Natural log; tokens
appearing in every log get weight zero, which is what makes the mask symbol
vanish from the geometry. Entries are nonnegative, so cosine similarities
live in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from logsift.preprocess import TokenizedLog


@dataclass(frozen=True)
class Vocabulary:
    """Chunk-level token index with document frequencies."""

    index: dict[str, int]
    doc_freq: np.ndarray  # per token index, int
    total_logs: int

    @property
    def size(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class LogVector:
    """Sparse nonnegative vector; ``indices`` sorted ascending, zeros dropped."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int
    norm: float


def build_vocabulary(logs: list[TokenizedLog]) -> Vocabulary:
    """Index all masked tokens of a chunk, in first-appearance order."""
    if not logs:
        raise ValueError("cannot build a vocabulary from an empty chunk")
    index: dict[str, int] = {}
    doc_freq: list[int] = []
    for log in logs:
        seen: set[str] = set()
        for token in log.masked_tokens:
            if token in seen:
                continue
            seen.add(token)
            at = index.get(token)
            if at is None:
                index[token] = len(doc_freq)
                doc_freq.append(1)
            else:
                doc_freq[at] += 1
    return Vocabulary(index=index, doc_freq=np.array(doc_freq, dtype=np.int64),
                      total_logs=len(logs))


def tfidf_vector(log: TokenizedLog, vocab: Vocabulary) -> LogVector:
    """Vectorize one log against the vocabulary of its own chunk."""
    tokens = log.masked_tokens
    if not tokens:
        return LogVector(indices=np.empty(0, dtype=np.int64),
                         values=np.empty(0, dtype=np.float64),
                         dimension=vocab.size, norm=0.0)
    n = len(tokens)
    entries: list[tuple[int, float]] = []
    for token, count in Counter(tokens).items():
        at = vocab.index.get(token)
        if at is None:
            raise ValueError(f"token {token!r} missing from vocabulary")
        idf = math.log(vocab.total_logs / int(vocab.doc_freq[at]))
        value = count * idf / (n * n)
        if value != 0.0:
            entries.append((at, value))
    entries.sort()
    indices = np.array([at for at, _ in entries], dtype=np.int64)
    values = np.array([v for _, v in entries], dtype=np.float64)
    return LogVector(indices=indices, values=values, dimension=vocab.size,
                     norm=float(np.sqrt(np.dot(values, values))))


def dense(vector: LogVector) -> np.ndarray:
    out = np.zeros(vector.dimension, dtype=np.float64)
    out[vector.indices] = vector.values
    return out


def unit(vector: LogVector) -> LogVector:
    """Scale to unit L2 norm; the zero vector is returned unchanged."""
    if vector.norm == 0.0:
        return vector
    return LogVector(indices=vector.indices, values=vector.values / vector.norm,
                     dimension=vector.dimension, norm=1.0)


def cosine_similarity(a: LogVector, b: LogVector) -> float:
    """Cosine with the usual degenerate-case definitions: two zero vectors
    are identical (1.0), one zero vector is orthogonal to anything (0.0)."""
    if a.norm == 0.0 and b.norm == 0.0:
        return 1.0
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    shared_a, shared_b = np.intersect1d(a.indices, b.indices, assume_unique=True,
                                        return_indices=True)[1:]
    dot = float(np.dot(a.values[shared_a], b.values[shared_b]))
    return dot / (a.norm * b.norm)


def stack(vectors: list[LogVector]) -> sparse.csr_matrix:
    """Stack vectors as rows of a CSR matrix (they must share a dimension)."""
    if not vectors:
        raise ValueError("nothing to stack")
    dimension = vectors[0].dimension
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dimension != dimension:
            raise ValueError("vectors span different vocabularies")
        indptr[i + 1] = indptr[i] + len(v.indices)
    indices = np.concatenate([v.indices for v in vectors]) if indptr[-1] else np.empty(0, dtype=np.int64)
    data = np.concatenate([v.values for v in vectors]) if indptr[-1] else np.empty(0, dtype=np.float64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


def cosine_matrix(vectors: list[LogVector]) -> np.ndarray:
    """Dense pairwise cosine matrix under the same degenerate-case rules
    as :func:`cosine_similarity`, clamped into [0, 1]."""
    n = len(vectors)
    norms = np.array([v.norm for v in vectors])
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    gram = (stack(vectors) @ stack(vectors).T).toarray()
    sim = gram / np.outer(safe, safe)
    if zero.any():
        sim[zero, :] = 0.0
        sim[:, zero] = 0.0
        pair = np.ix_(zero, zero)
        sim[pair] = 1.0
    np.fill_diagonal(sim, 1.0)
    return np.clip(sim, 0.0, 1.0)
