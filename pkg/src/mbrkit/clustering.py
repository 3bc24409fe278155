"""Unsupervised structure discovery over candidate embeddings.

k-means (k-means++ seeding, best of several restarts by within-cluster sum
of squares) with silhouette-based selection of k, falling back to a single
cluster when the best silhouette stays under a floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .utility import EmbeddingSet

# Floor under which the k-sweep falls back to a single cluster. Placeholder
# pending a per-corpus sweep (see tuning notes in the README).
DEFAULT_SILHOUETTE_FLOOR = 0.15
DEFAULT_RESTARTS = 8
DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple[int, ...]
    k: int
    sizes: tuple[int, ...]
    source: str = "kmeans"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if len(self.sizes) != self.k:
            raise ValueError("sizes length must equal k")
        counts = [0] * self.k
        for lab in self.labels:
            if not (0 <= lab < self.k):
                raise ValueError(f"cluster index {lab} outside 0..{self.k - 1}")
            counts[lab] += 1
        if tuple(counts) != tuple(self.sizes):
            raise ValueError("sizes inconsistent with labels")
        if min(counts) == 0:
            raise ValueError("every cluster index must occur at least once")


def assignment_from_labels(labels) -> ClusterAssignment:
    """Gold assignment from string labels, clusters in first-appearance order."""
    index: dict[str, int] = {}
    out = []
    for lab in labels:
        if lab not in index:
            index[lab] = len(index)
        out.append(index[lab])
    k = len(index)
    sizes = [0] * k
    for c in out:
        sizes[c] += 1
    return ClusterAssignment(labels=tuple(out), k=k, sizes=tuple(sizes), source="gold")


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[int(rng.integers(n))]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[c] = x[int(rng.integers(n))]
            continue
        probs = d2 / total
        centroids[c] = x[int(rng.choice(n, p=probs))]
        d2 = np.minimum(d2, ((x - centroids[c]) ** 2).sum(axis=1))
    return centroids


def _lloyd(x: np.ndarray, k: int, rng: np.random.Generator, max_iters: int):
    """One k-means run. Returns (labels, wcss, per-iteration wcss trace)."""
    n = x.shape[0]
    centroids = _plus_plus_init(x, k, rng)
    labels = np.zeros(n, dtype=int)
    trace: list[float] = []
    for _ in range(max_iters):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        # Repair empty clusters with the point farthest from its centroid.
        own = d2[np.arange(n), labels].copy()
        for c in range(k):
            if not (labels == c).any():
                far = int(own.argmax())
                labels[far] = c
                own[far] = -1.0
        new_centroids = np.empty_like(centroids)
        for c in range(k):
            new_centroids[c] = x[labels == c].mean(axis=0)
        converged = np.array_equal(new_centroids, centroids)
        if not converged or not trace:
            trace.append(float(((x - new_centroids[labels]) ** 2).sum()))
        if converged:
            break
        centroids = new_centroids
    return labels, trace[-1], trace


def kmeans(
    e: EmbeddingSet,
    k: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Best-of-restarts k-means on the embedding vectors; deterministic."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > e.n:
        raise ValueError(f"k={k} exceeds number of points n={e.n}")
    x = e.vectors.astype(np.float64)
    if k == 1:
        return ClusterAssignment(labels=(0,) * e.n, k=1, sizes=(e.n,), source="kmeans")
    rng = np.random.default_rng(seed)
    best_labels, best_wcss = None, np.inf
    for _ in range(max(1, restarts)):
        labels, wcss, _ = _lloyd(x, k, rng, max_iters)
        if wcss < best_wcss:
            best_labels, best_wcss = labels, wcss
    sizes = tuple(int((best_labels == c).sum()) for c in range(k))
    return ClusterAssignment(labels=tuple(int(v) for v in best_labels), k=k, sizes=sizes, source="kmeans")


def silhouette(e: EmbeddingSet, a: ClusterAssignment) -> float:
    """Mean silhouette score; singleton clusters contribute 0 for their point."""
    if a.k < 2:
        raise ValueError("silhouette requires k >= 2")
    if len(a.labels) != e.n:
        raise ValueError("assignment does not cover the embedding set")
    x = e.vectors.astype(np.float64)
    labels = np.asarray(a.labels)
    d = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2), 0.0))
    scores = np.zeros(e.n)
    for i in range(e.n):
        same = labels == labels[i]
        n_same = int(same.sum())
        if n_same <= 1:
            continue  # singleton: contributes 0
        a_i = d[i, same].sum() / (n_same - 1)
        b_i = min(d[i, labels == c].mean() for c in range(a.k) if c != labels[i])
        m = max(a_i, b_i)
        if m > 0:
            scores[i] = (b_i - a_i) / m
    return float(scores.mean())


def select_k(
    e: EmbeddingSet,
    kmin: int = 2,
    kmax: int = 6,
    silhouette_floor: float = DEFAULT_SILHOUETTE_FLOOR,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Pick k in [kmin, kmax] by silhouette; fall back to k=1 under the floor."""
    if kmax < kmin:
        raise ValueError("kmax must be >= kmin")
    if kmax > e.n:
        raise ValueError(f"kmax={kmax} exceeds number of points n={e.n}")
    best, best_score = None, -np.inf
    for k in range(kmin, kmax + 1):
        assignment = kmeans(e, k, seed=seed, max_iters=max_iters, restarts=restarts)
        score = silhouette(e, assignment)
        if score > best_score:
            best, best_score = assignment, score
    if best is None or best_score < silhouette_floor:
        return ClusterAssignment(labels=(0,) * e.n, k=1, sizes=(e.n,), source="kmeans")
    return best
