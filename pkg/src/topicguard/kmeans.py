"""k-means with k-means++ seeding and Lloyd iterations.

Used by the category-clustering baselines: one groups apps by LDA topic
mixtures, the other clusters description embeddings directly.  Empty
clusters are repaired by stealing the point farthest from its assigned
centroid.  Assignment ties go to the lowest cluster index, so results are
deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    seed: int
    inertia_history: list[float] = field(default_factory=list)


def _sq_dist_to_centroids(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diffs = X[:, None, :] - centroids[None, :, :]
    return (diffs * diffs).sum(axis=2)


def _plus_plus_init(X: np.ndarray, k: int,
                    rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    first = int(rng.integers(0, n))
    centroids[0] = X[first]
    closest_sq = ((X - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(closest_sq.sum())
        if total <= 0.0:
            # all remaining mass is on duplicate points; any choice works
            idx = int(rng.integers(0, n))
        else:
            idx = int(rng.choice(n, p=closest_sq / total))
        centroids[c] = X[idx]
        closest_sq = np.minimum(closest_sq,
                                ((X - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(X: np.ndarray, k: int, max_iter: int = 300,
               seed: int = 0) -> KMeansModel:
    """Lloyd iterations until assignments stop changing or max_iter."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise NumericError(f"k-means needs at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        sq = _sq_dist_to_centroids(X, centroids)
        new_labels = np.argmin(sq, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # steal the point farthest from its current centroid, but never
            # drain a singleton cluster
            own = sq[np.arange(n), new_labels].copy()
            own[counts[new_labels] <= 1] = -np.inf
            thief = int(np.argmax(own))
            counts[new_labels[thief]] -= 1
            new_labels[thief] = empty
            counts[empty] = 1
        for c in range(k):
            members = new_labels == c
            centroids[c] = X[members].mean(axis=0)
        sq = _sq_dist_to_centroids(X, centroids)
        inertia = float(sq[np.arange(n), new_labels].sum())
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansModel(k=k, centroids=centroids, inertia=history[-1],
                       iterations_run=iterations, seed=seed,
                       inertia_history=history)


def kmeans_assign(model: KMeansModel, X: np.ndarray) -> np.ndarray:
    """Nearest centroid per row, ties to the lowest cluster index."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.argmin(_sq_dist_to_centroids(X, model.centroids), axis=1)
