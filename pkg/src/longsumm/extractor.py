"""One extractive step: embed, cluster, select, concatenate.

Each chunk's sentences are embedded and clustered with K-means; the sentence
nearest each centroid represents its cluster, and representatives are
emitted in original document order. The number of clusters per chunk is
``round(ratio * n_sentences)``. Because per-chunk rounding drifts away from
the target ratio on many small chunks, an optional global correction
apportions a corpus-level sentence target across chunks by largest
remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from longsumm.textseg import CachedTokenCounter, Chunk

__all__ = [
    "DISTANCE_METRICS",
    "SentenceEmbedding",
    "KMeansResult",
    "ExtractionStepResult",
    "ExtractionError",
    "kmeans",
    "select_sentences",
    "select_k_sentences",
    "extract_step",
]

_MAX_ITERATIONS = 100

DISTANCE_METRICS = ("euclidean", "cosine")


def _apply_metric(data: np.ndarray, metric: str) -> np.ndarray:
    """Euclidean works on raw vectors; cosine on unit-normalized ones."""
    if metric not in DISTANCE_METRICS:
        raise ValueError(f"unknown distance metric {metric!r}, expected one of {DISTANCE_METRICS}")
    if metric == "euclidean":
        return data
    norms = np.linalg.norm(data, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # zero vectors stay at the origin
    return data / norms


class ExtractionError(RuntimeError):
    """An extractive step failed; carries the chunk it failed on."""

    def __init__(self, message: str, chunk_index: int | None = None):
        super().__init__(message)
        self.chunk_index = chunk_index


@dataclass
class SentenceEmbedding:
    """Embedding vector for one sentence, keyed by its document index."""

    sentence_index: int
    vector: np.ndarray


@dataclass
class KMeansResult:
    assignments: list[int]
    centroids: np.ndarray
    distortions: list[float]  # within-cluster squared distance per iteration
    n_iterations: int


@dataclass
class ExtractionStepResult:
    """Output of one extractive step over all chunks."""

    step_index: int
    per_chunk_selected: list[list[int]]
    concatenated_text: str
    token_count: int
    per_chunk_k: list[int] = field(default_factory=list)
    truncated_chunks: int = 0


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids by squared distance."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=float)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(closest.sum())
        if total > 0.0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))  # all remaining points coincide
        centroids[j] = points[idx]
        closest = np.minimum(closest, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(points: Sequence[Sequence[float]], k: int, seed: int) -> KMeansResult:
    """Lloyd's algorithm with seeded k-means++ initialization.

    Iterates until assignments are stable or 100 iterations. An empty
    cluster is re-seeded with the point currently farthest from its own
    centroid. The recorded per-iteration distortion is non-increasing.
    """
    try:
        data = np.asarray(points, dtype=float)
    except ValueError as exc:
        raise ValueError("points must share a uniform dimension") from exc
    if data.ndim != 2:
        raise ValueError("points must share a uniform dimension")
    n = data.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not np.all(np.isfinite(data)):
        raise ValueError("points must be finite")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(data, k, rng)
    previous: np.ndarray | None = None
    assignments = np.zeros(n, dtype=int)
    distortions: list[float] = []
    iterations = 0

    for iterations in range(1, _MAX_ITERATIONS + 1):
        squared = ((data[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assignments = squared.argmin(axis=1)
        point_distortion = squared[np.arange(n), assignments]
        for j in range(k):
            if not np.any(assignments == j):
                farthest = int(point_distortion.argmax())
                centroids[j] = data[farthest]
                assignments[farthest] = j
                point_distortion[farthest] = 0.0
        distortions.append(float(point_distortion.sum()))
        if previous is not None and np.array_equal(assignments, previous):
            break
        previous = assignments.copy()
        for j in range(k):
            centroids[j] = data[assignments == j].mean(axis=0)

    return KMeansResult(
        assignments=[int(a) for a in assignments],
        centroids=centroids,
        distortions=distortions,
        n_iterations=iterations,
    )


def _representatives(
    data: np.ndarray, indices: list[int], result: KMeansResult, k: int
) -> list[int]:
    """Nearest-to-centroid sentence per cluster; ties go to the lower index."""
    chosen: list[int] = []
    assignments = np.asarray(result.assignments)
    for j in range(k):
        members = np.nonzero(assignments == j)[0]
        if members.size == 0:
            continue
        distances = ((data[members] - result.centroids[j]) ** 2).sum(axis=1)
        best = members[int(distances.argmin())]  # argmin takes the first minimum
        chosen.append(indices[int(best)])
    return sorted(set(chosen))


def select_k_sentences(
    chunk: Chunk,
    embeddings: Sequence[SentenceEmbedding],
    k: int,
    seed: int,
    metric: str = "euclidean",
) -> list[int]:
    """Select exactly ``k`` representative sentences from a chunk."""
    if not chunk.sentences:
        raise ValueError("cannot select from an empty chunk")
    by_index = {e.sentence_index: e for e in embeddings}
    missing = [s.index for s in chunk.sentences if s.index not in by_index]
    if missing:
        raise ValueError(f"missing embeddings for sentence indices {missing}")
    indices = [s.index for s in chunk.sentences]
    data = np.asarray([by_index[i].vector for i in indices], dtype=float)
    data = _apply_metric(data, metric)
    k = max(1, min(k, len(indices)))
    if k == len(indices):
        return list(indices)
    result = kmeans(data, k, seed)
    return _representatives(data, indices, result, k)


def select_sentences(
    chunk: Chunk,
    embeddings: Sequence[SentenceEmbedding],
    ratio: float,
    seed: int,
    metric: str = "euclidean",
) -> list[int]:
    """Select ``round(ratio * n)`` representatives, at least one."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    n = len(chunk.sentences)
    if n == 0:
        raise ValueError("cannot select from an empty chunk")
    k = max(1, min(_round_half_up(ratio * n), n))
    return select_k_sentences(chunk, embeddings, k, seed, metric)


def _apportion(quotas: list[float], caps: list[int], total: int) -> list[int]:
    """Largest-remainder apportionment with a floor of one per chunk."""
    ks = [min(cap, max(1, math.floor(q))) for q, cap in zip(quotas, caps)]
    total = max(min(total, sum(caps)), len(ks))
    while sum(ks) < total:
        deficits = [
            (q - k, -i) for i, (q, k, cap) in enumerate(zip(quotas, ks, caps)) if k < cap
        ]
        _, neg_i = max(deficits)
        ks[-neg_i] += 1
    while sum(ks) > total:
        excesses = [
            (k - q, -i) for i, (q, k) in enumerate(zip(quotas, ks)) if k > 1
        ]
        _, neg_i = max(excesses)
        ks[-neg_i] -= 1
    return ks


def extract_step(
    chunks: Sequence[Chunk],
    ratio: float,
    embed: Callable[[list[str]], Sequence[Sequence[float]]],
    seed: int,
    *,
    step_index: int = 0,
    global_correction: bool = False,
    metric: str = "euclidean",
    counter: CachedTokenCounter | None = None,
    tokenizer_id: str | None = None,
) -> ExtractionStepResult:
    """Run one extractive step over all chunks and concatenate in order.

    ``embed`` maps a list of sentence texts to equal-length vectors. With
    ``global_correction`` the per-chunk cluster counts are apportioned so
    their sum equals ``round(ratio * total_sentences)`` instead of rounding
    each chunk independently.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    sizes = [len(c.sentences) for c in chunks]
    if global_correction and chunks:
        quotas = [ratio * n for n in sizes]
        target = _round_half_up(ratio * sum(sizes))
        per_chunk_k = _apportion(quotas, sizes, target)
    else:
        per_chunk_k = [max(1, min(_round_half_up(ratio * n), n)) for n in sizes]

    per_chunk_selected: list[list[int]] = []
    pieces: list[str] = []
    for chunk, k in zip(chunks, per_chunk_k):
        try:
            vectors = embed([s.text for s in chunk.sentences])
        except Exception as exc:
            raise ExtractionError(
                f"embedding failed for chunk {chunk.chunk_index}: {exc}",
                chunk_index=chunk.chunk_index,
            ) from exc
        embeddings = [
            SentenceEmbedding(s.index, np.asarray(v, dtype=float))
            for s, v in zip(chunk.sentences, vectors)
        ]
        selected = select_k_sentences(chunk, embeddings, k, seed, metric)
        per_chunk_selected.append(selected)
        by_index = {s.index: s for s in chunk.sentences}
        pieces.extend(by_index[i].text for i in selected)

    concatenated = " ".join(pieces)
    if counter is not None and tokenizer_id is not None:
        token_count = counter.count(concatenated, tokenizer_id)
    elif tokenizer_id is not None:
        token_count = sum(
            s.token_count.get(tokenizer_id, 0)
            for chunk, selected in zip(chunks, per_chunk_selected)
            for s in chunk.sentences
            if s.index in selected
        )
    else:
        token_count = 0
    return ExtractionStepResult(
        step_index=step_index,
        per_chunk_selected=per_chunk_selected,
        concatenated_text=concatenated,
        token_count=token_count,
        per_chunk_k=list(per_chunk_k),
        truncated_chunks=sum(1 for c in chunks if c.truncated),
    )
