"""Neighbor-graph dimensionality reduction (UMAP-style), from scratch.

Pipeline: exact k-nearest-neighbor graph, per-point smooth-kNN calibration
(rho = nearest nonzero distance, sigma found by binary search so the sum of
membership weights hits log2(k)), probabilistic t-conorm symmetrization
``w1 + w2 - w1*w2``, then stochastic gradient descent on a cross-entropy
layout objective with negative sampling.  The low-dimensional similarity
curve ``1 / (1 + a d^(2b))`` has (a, b) fitted to a shifted exponential with
the given ``min_dist``.

Everything is deterministic given the seed.  ``fit_reducer`` additionally
canonicalizes point order internally (lexicographic row sort) so the learned
layout is equivariant under permutations of the input rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

from .errors import NumericError

SMOOTH_K_TOLERANCE = 1e-5
MIN_SIGMA = 1e-3
GRAD_CLIP = 4.0
NEGATIVE_SAMPLE_RATE = 5
REPULSION_STRENGTH = 1.0
INIT_RANGE = 10.0


@dataclass
class KnnGraph:
    """Exact k nearest neighbors per point, self excluded.

    Rows of ``indices``/``distances`` are sorted by distance, ties broken by
    lower index.
    """

    k: int
    indices: np.ndarray
    distances: np.ndarray


@dataclass
class FuzzyGraph:
    """Symmetrized weighted neighbor graph as an undirected edge list."""

    n_points: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray


@dataclass
class LowDimLayout:
    points: np.ndarray
    a: float
    b: float


@dataclass
class UmapReducer:
    """Fitted reducer: training points, their layout, and curve parameters."""

    n_neighbors: int
    out_dim: int
    min_dist: float
    epochs: int
    seed: int
    a: float
    b: float
    train_points: np.ndarray
    layout: np.ndarray


def pairwise_sq_distances(X: np.ndarray) -> np.ndarray:
    """Full squared distance matrix, computed row by row for exactness."""
    n = X.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        diff = X - X[i]
        out[i] = (diff * diff).sum(axis=1)
    return out


def knn_graph(X: np.ndarray, k: int) -> KnnGraph:
    """Exact kNN by full scan.  Requires 1 <= k < n."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        diff = X - X[i]
        d = np.sqrt((diff * diff).sum(axis=1))
        # stable sort keeps lower indices first among ties; drop only the
        # point itself, not other zero-distance points
        order = np.argsort(d, kind="stable")
        order = order[order != i]
        indices[i] = order[:k]
        distances[i] = d[indices[i]]
    return KnnGraph(k=k, indices=indices, distances=distances)


def smooth_knn_calibration(graph: KnnGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (rho, sigma) so memberships sum to log2(k).

    rho is the distance to the nearest neighbor.  sigma comes from a 64-step
    binary search with tolerance 1e-5 on the weight sum, floored at 1e-3 so
    all-equal neighbor distances cannot drive it to zero.
    """
    n, k = graph.distances.shape
    target = np.log2(k)
    rho = np.zeros(n, dtype=np.float64)
    sigma = np.zeros(n, dtype=np.float64)
    for i in range(n):
        ds = graph.distances[i]
        rho[i] = ds[0]
        lo, hi, mid = 0.0, np.inf, 1.0
        for _ in range(64):
            psum = 0.0
            for j in range(k):
                d = ds[j] - rho[i]
                psum += np.exp(-(d / mid)) if d > 0.0 else 1.0
            if abs(psum - target) < SMOOTH_K_TOLERANCE:
                break
            if psum > target:
                hi = mid
                mid = (lo + hi) / 2.0
            else:
                lo = mid
                mid = mid * 2.0 if hi == np.inf else (lo + hi) / 2.0
        sigma[i] = max(mid, MIN_SIGMA)
    return rho, sigma


def membership_strengths(graph: KnnGraph, rho: np.ndarray,
                         sigma: np.ndarray) -> dict[tuple[int, int], float]:
    """Directed edge weights exp(-max(0, d - rho_i) / sigma_i)."""
    weights: dict[tuple[int, int], float] = {}
    n, k = graph.distances.shape
    for i in range(n):
        for jj in range(k):
            j = int(graph.indices[i, jj])
            d = graph.distances[i, jj] - rho[i]
            w = float(np.exp(-(d / sigma[i]))) if d > 0.0 else 1.0
            weights[(i, j)] = w
    return weights


def t_conorm(w1: float, w2: float) -> float:
    """Probabilistic sum: the union strength of two directed memberships."""
    return w1 + w2 - w1 * w2


def fuzzy_simplicial_set(graph: KnnGraph) -> FuzzyGraph:
    """Calibrate memberships and symmetrize with w1 + w2 - w1*w2."""
    rho, sigma = smooth_knn_calibration(graph)
    directed = membership_strengths(graph, rho, sigma)
    undirected: dict[tuple[int, int], float] = {}
    for (i, j) in directed:
        key = (i, j) if i < j else (j, i)
        if key not in undirected:
            wab = directed.get((key[0], key[1]), 0.0)
            wba = directed.get((key[1], key[0]), 0.0)
            undirected[key] = t_conorm(wab, wba)
    keys = sorted(undirected)
    heads = np.array([a for a, _ in keys], dtype=np.int64)
    tails = np.array([b for _, b in keys], dtype=np.int64)
    weights = np.array([undirected[key] for key in keys], dtype=np.float64)
    n = graph.indices.shape[0]
    return FuzzyGraph(n_points=n, heads=heads, tails=tails, weights=weights,
                      rho=rho, sigma=sigma)


def find_curve_params(min_dist: float,
                      spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a x^(2b)) to the min_dist kernel."""

    def low_dim_target(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    xv = np.linspace(0.0, spread * 3.0, 300)
    yv = np.zeros_like(xv)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(low_dim_target, xv, yv)
    return float(params[0]), float(params[1])


@njit(cache=True)
def _sgd_layout(emb, head, tail, epochs_per_sample, a, b, gamma, n_epochs,
                seed):
    """Cross-entropy layout SGD with negative sampling.

    Per-edge scheduling: an edge fires whenever its next-sample epoch has
    arrived, so heavier edges fire more often.  Gradient components are
    clipped to +-4 before the learning-rate scaling; the learning rate
    decays linearly from 1 to 0.
    """
    np.random.seed(seed)
    n_points, dim = emb.shape
    n_edges = head.shape[0]
    epoch_of_next_sample = epochs_per_sample.copy()
    epochs_per_negative = epochs_per_sample / NEGATIVE_SAMPLE_RATE
    epoch_of_next_negative = epochs_per_negative.copy()
    for epoch in range(n_epochs):
        alpha = 1.0 - epoch / n_epochs
        for e in range(n_edges):
            if epoch_of_next_sample[e] > epoch:
                continue
            i = head[e]
            j = tail[e]
            d2 = 0.0
            for c in range(dim):
                diff = emb[i, c] - emb[j, c]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (
                    a * d2 ** b + 1.0)
            else:
                coeff = 0.0
            for c in range(dim):
                g = coeff * (emb[i, c] - emb[j, c])
                if g > GRAD_CLIP:
                    g = GRAD_CLIP
                elif g < -GRAD_CLIP:
                    g = -GRAD_CLIP
                emb[i, c] += g * alpha
                emb[j, c] -= g * alpha
            epoch_of_next_sample[e] += epochs_per_sample[e]
            n_neg = int((epoch - epoch_of_next_negative[e])
                        / epochs_per_negative[e])
            for _ in range(n_neg):
                r = np.random.randint(0, n_points)
                if r == i:
                    continue
                d2 = 0.0
                for c in range(dim):
                    diff = emb[i, c] - emb[r, c]
                    d2 += diff * diff
                coeff = (2.0 * gamma * b) / (
                    (0.001 + d2) * (a * d2 ** b + 1.0))
                for c in range(dim):
                    if coeff > 0.0:
                        g = coeff * (emb[i, c] - emb[r, c])
                        if g > GRAD_CLIP:
                            g = GRAD_CLIP
                        elif g < -GRAD_CLIP:
                            g = -GRAD_CLIP
                    else:
                        g = GRAD_CLIP
                    emb[i, c] += g * alpha
            epoch_of_next_negative[e] += n_neg * epochs_per_negative[e]
    return emb


def optimize_layout(graph: FuzzyGraph, out_dim: int, epochs: int,
                    min_dist: float, seed: int) -> LowDimLayout:
    """Random init in [-10, 10]^dim, then SGD over the scheduled edges.

    The (a, b) curve constants are fitted from min_dist.  Edges too weak to
    fire even once (weight below max/epochs) are dropped, and each
    undirected edge is expanded to both directions so either endpoint can
    act as the moving head.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    a, b = find_curve_params(min_dist)
    w_max = float(graph.weights.max()) if graph.weights.size else 0.0
    if w_max <= 0.0:
        raise NumericError("neighbor graph has no positive edge weights")
    keep = graph.weights >= w_max / epochs
    heads = np.concatenate([graph.heads[keep], graph.tails[keep]])
    tails = np.concatenate([graph.tails[keep], graph.heads[keep]])
    weights = np.concatenate([graph.weights[keep], graph.weights[keep]])
    order = np.lexsort((tails, heads))
    heads, tails, weights = heads[order], tails[order], weights[order]
    epochs_per_sample = w_max / weights

    rng = np.random.default_rng(seed)
    emb = rng.uniform(-INIT_RANGE, INIT_RANGE,
                      size=(graph.n_points, out_dim)).astype(np.float64)
    emb = _sgd_layout(emb, heads, tails, epochs_per_sample, a, b,
                      REPULSION_STRENGTH, epochs, seed % (2 ** 32 - 1))
    if not np.all(np.isfinite(emb)):
        raise NumericError("layout optimization produced non-finite "
                           "coordinates")
    return LowDimLayout(points=emb, a=a, b=b)


def fit_reducer(X: np.ndarray, n_neighbors: int = 15, out_dim: int = 5,
                min_dist: float = 0.1, epochs: int = 200,
                seed: int = 0) -> UmapReducer:
    """Fit the full reduction on X (rows are points).

    Rows are sorted lexicographically before any neighbor computation and
    the layout is mapped back afterwards, which makes the result equivariant
    under input permutations (for distinct rows).  k is clamped to n - 1
    with a warning when the dataset is smaller than requested.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise NumericError("reducer needs a 2-d array with at least 3 rows")
    n = X.shape[0]
    k = n_neighbors
    if k >= n:
        warnings.warn(f"n_neighbors={k} >= n={n}; clamping to {n - 1}")
        k = n - 1
    order = np.lexsort(tuple(X.T[::-1]))
    Xc = X[order]
    graph = knn_graph(Xc, k)
    fuzzy = fuzzy_simplicial_set(graph)
    layout_c = optimize_layout(fuzzy, out_dim, epochs, min_dist, seed)
    layout = np.empty_like(layout_c.points)
    layout[order] = layout_c.points
    return UmapReducer(n_neighbors=k, out_dim=out_dim, min_dist=min_dist,
                       epochs=epochs, seed=seed, a=layout_c.a, b=layout_c.b,
                       train_points=X.copy(), layout=layout)


def transform(reducer: UmapReducer, x: np.ndarray) -> np.ndarray:
    """Map a new point into the learned layout.

    A point at distance exactly zero from a training point reuses that
    point's layout row (lowest index wins among duplicates).  Otherwise the
    k nearest training points are combined with weights exp(-d / mean(d)).
    """
    x = np.asarray(x, dtype=np.float64)
    diff = reducer.train_points - x
    d = np.sqrt((diff * diff).sum(axis=1))
    k = min(reducer.n_neighbors, d.shape[0])
    order = np.argsort(d, kind="stable")[:k]
    nd = d[order]
    if nd[0] == 0.0:
        return reducer.layout[order[0]].copy()
    w = np.exp(-nd / float(np.mean(nd)))
    w /= w.sum()
    return (w[:, None] * reducer.layout[order]).sum(axis=0)


def transform_many(reducer: UmapReducer, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.stack([transform(reducer, row) for row in X]) if len(X) else \
        np.zeros((0, reducer.out_dim))
