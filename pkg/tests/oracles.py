"""Independent reference implementations used to cross-check the package.

Everything here is written from the underlying definitions with the most
literal algorithm available (explicit loops, exhaustive scans, generic
convex solvers), deliberately avoiding the vectorized shortcuts the
package itself uses.  Slow is fine; these run on small fixtures.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np


# ---------------------------------------------------------------------------
# geometry


def brute_knn(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest neighbors by scanning every pair, sorted by (dist, index)."""
    n = len(X)
    indices = np.zeros((n, k), dtype=np.int64)
    distances = np.zeros((n, k), dtype=np.float64)
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for c in range(X.shape[1]):
                diff = X[i, c] - X[j, c]
                s += diff * diff
            cand.append((math.sqrt(s), j))
        cand.sort()
        for rank in range(k):
            distances[i, rank] = cand[rank][0]
            indices[i, rank] = cand[rank][1]
    return indices, distances


def brute_core_distances(X: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to the min_samples-th nearest other point, by full sort."""
    n = len(X)
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        ds = []
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for c in range(X.shape[1]):
                diff = X[i, c] - X[j, c]
                s += diff * diff
            ds.append(math.sqrt(s))
        ds.sort()
        out[i] = ds[min_samples - 1]
    return out


def mutual_reachability_matrix(X: np.ndarray,
                               core: np.ndarray) -> np.ndarray:
    """Dense max(core_a, core_b, d(a,b)) matrix with a zero diagonal."""
    n = len(X)
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            s = 0.0
            for c in range(X.shape[1]):
                diff = X[i, c] - X[j, c]
                s += diff * diff
            out[i, j] = max(core[i], core[j], math.sqrt(s))
    return out


def kruskal_mst_weight(weights: np.ndarray) -> float:
    """Total MST weight of a dense symmetric graph, by Kruskal's algorithm."""
    n = weights.shape[0]
    edges = sorted((weights[i, j], i, j)
                   for i in range(n) for j in range(i + 1, n))
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    total = 0.0
    taken = 0
    for w, a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            total += w
            taken += 1
            if taken == n - 1:
                break
    return total


# ---------------------------------------------------------------------------
# condensed hierarchy replay (set-based, recursive)


def replay_condensed_tree(n: int, mst_edges: list[tuple[int, int, float]],
                          min_cluster_size: int
                          ) -> list[tuple[frozenset, object, float, int]]:
    """Condensed tree rows as (parent_points, child, lambda, size) tuples.

    Merges are replayed with explicit python sets; the tree is condensed
    recursively.  A child is the point index for leaf rows, or the frozenset
    of points under the subcluster for cluster rows.  Rows are returned
    unordered; compare as multisets.
    """
    order = sorted(mst_edges, key=lambda e: (e[2], min(e[0], e[1]),
                                             max(e[0], e[1])))
    members: dict[int, frozenset] = {i: frozenset([i]) for i in range(n)}
    owner = {i: i for i in range(n)}
    children: dict[int, tuple[int, int]] = {}
    weight_of: dict[int, float] = {}
    next_id = n
    for a, b, w in order:
        ra, rb = owner[a], owner[b]
        children[next_id] = (ra, rb)
        weight_of[next_id] = w
        members[next_id] = members[ra] | members[rb]
        for p in members[next_id]:
            owner[p] = next_id
        next_id += 1
    root = next_id - 1

    rows: list[tuple[frozenset, object, float, int]] = []

    def lam_of(node: int) -> float:
        w = weight_of[node]
        return (1.0 / w) if w > 0.0 else math.inf

    def shed_leaves(cluster_points: frozenset, node: int, lam: float) -> None:
        """Points of a too-small subtree fall out of cluster_points at lam."""
        for p in sorted(members[node]):
            rows.append((cluster_points, p, lam, 1))

    def walk(node: int, cluster_points: frozenset) -> None:
        """Recurse down binary merges while the cluster keeps its identity."""
        if node < n:
            return
        left, right = children[node]
        lam = lam_of(node)
        big_left = len(members[left]) >= min_cluster_size
        big_right = len(members[right]) >= min_cluster_size
        if big_left and big_right:
            rows.append((cluster_points, members[left], lam,
                         len(members[left])))
            rows.append((cluster_points, members[right], lam,
                         len(members[right])))
            walk(left, members[left])
            walk(right, members[right])
        elif big_left:
            shed_leaves(cluster_points, right, lam)
            walk(left, cluster_points)
        elif big_right:
            shed_leaves(cluster_points, left, lam)
            walk(right, cluster_points)
        else:
            shed_leaves(cluster_points, left, lam)
            shed_leaves(cluster_points, right, lam)

    walk(root, frozenset(range(n)))
    return rows


# ---------------------------------------------------------------------------
# capped-simplex QP (one-class SVM dual)


def project_capped_simplex(v: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto {0 <= x <= cap, sum x = 1} by bisection."""
    lo = float(v.min()) - cap - 1.0
    hi = float(v.max()) + 1.0
    for _ in range(200):
        tau = (lo + hi) / 2.0
        s = float(np.clip(v - tau, 0.0, cap).sum())
        if s > 1.0:
            lo = tau
        else:
            hi = tau
    return np.clip(v - (lo + hi) / 2.0, 0.0, cap)


def qp_min_quadratic(Q: np.ndarray, cap: float,
                     iterations: int = 200_000) -> np.ndarray:
    """Minimize 0.5 x^T Q x over the capped simplex by accelerated
    projected gradient (FISTA) with a 1/L step."""
    n = Q.shape[0]
    L = float(np.linalg.eigvalsh(Q).max())
    if L <= 0.0:
        L = 1.0
    step = 1.0 / L
    x = project_capped_simplex(np.zeros(n), cap)
    y = x.copy()
    t = 1.0
    for _ in range(iterations):
        grad = Q @ y
        x_new = project_capped_simplex(y - step * grad, cap)
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        if float(np.abs(x_new - x).max()) < 1e-15:
            x = x_new
            break
        x, t = x_new, t_new
    return x


def rbf_gram(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    n, m = len(A), len(B)
    out = np.zeros((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for c in range(A.shape[1]):
                diff = A[i, c] - B[j, c]
                s += diff * diff
            out[i, j] = math.exp(-gamma * s)
    return out


def ocsvm_qp_oracle(X: np.ndarray, nu: float, gamma: float
                    ) -> tuple[np.ndarray, float, float]:
    """(alphas, rho, objective) for the one-class dual, solved generically.

    rho follows the interior-support-vector convention: mean of (Q alpha)_i
    over alphas strictly inside (0, C), falling back to the midpoint of the
    boundary gradient values.
    """
    n = len(X)
    C = 1.0 / (nu * n)
    Q = rbf_gram(X, X, gamma)
    alpha = qp_min_quadratic(Q, C)
    grad = Q @ alpha
    margin = C * 1e-6
    interior = (alpha > margin) & (alpha < C - margin)
    if interior.any():
        rho = float(grad[interior].mean())
    else:
        at_upper = grad[alpha >= C - margin]
        at_lower = grad[alpha <= margin]
        hi = float(at_upper.max()) if at_upper.size else None
        lo = float(at_lower.min()) if at_lower.size else None
        if hi is None:
            rho = lo
        elif lo is None:
            rho = hi
        else:
            rho = (hi + lo) / 2.0
    objective = 0.5 * float(alpha @ Q @ alpha)
    return alpha, rho, objective


def ocsvm_oracle_decision(X_train: np.ndarray, alpha: np.ndarray,
                          rho: float, gamma: float,
                          probes: np.ndarray) -> np.ndarray:
    K = rbf_gram(X_train, probes, gamma)
    return alpha @ K - rho


# ---------------------------------------------------------------------------
# co-occurrence recount


def naive_cooccurrence(docs: list[tuple[str, ...]], window_size: int
                       ) -> tuple[int, dict, dict]:
    """(total_windows, word counts, unordered pair counts), recounted from
    scratch with per-window sets."""
    total = 0
    word_counts: dict[str, int] = {}
    pair_counts: dict[tuple[str, str], int] = {}
    for tokens in docs:
        if not tokens:
            continue
        n_windows = max(1, len(tokens) - window_size + 1)
        for start in range(n_windows):
            window = set(tokens[start:start + window_size])
            total += 1
            for w in window:
                word_counts[w] = word_counts.get(w, 0) + 1
            for w1, w2 in combinations(sorted(window), 2):
                pair_counts[(w1, w2)] = pair_counts.get((w1, w2), 0) + 1
    return total, word_counts, pair_counts


def naive_npmi_topic(words: tuple[str, ...], total: int, word_counts: dict,
                     pair_counts: dict, eps: float) -> float:
    """Mean pairwise NPMI straight from the formula."""
    scores = []
    for w1, w2 in combinations(words, 2):
        key = (w1, w2) if w1 <= w2 else (w2, w1)
        p1 = max(word_counts.get(w1, 0) / total, eps)
        p2 = max(word_counts.get(w2, 0) / total, eps)
        p12 = pair_counts.get(key, 0) / total
        scores.append(math.log((p12 + eps) / (p1 * p2))
                      / (-math.log(p12 + eps)))
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# clustering agreement


def pair_counting_ari(a: tuple, b: tuple) -> float:
    """Adjusted Rand index from the pair-counting contingency formula."""
    assert len(a) == len(b)
    n = len(a)
    joint: dict[tuple, int] = {}
    rows: dict[object, int] = {}
    cols: dict[object, int] = {}
    for x, y in zip(a, b):
        joint[(x, y)] = joint.get((x, y), 0) + 1
        rows[x] = rows.get(x, 0) + 1
        cols[y] = cols.get(y, 0) + 1
    comb2 = lambda v: v * (v - 1) // 2
    index = sum(comb2(v) for v in joint.values())
    sum_rows = sum(comb2(v) for v in rows.values())
    sum_cols = sum(comb2(v) for v in cols.values())
    expected = sum_rows * sum_cols / comb2(n)
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def dominant_topic_purity(true_labels: tuple, assigned: tuple) -> float:
    """Sum over assigned groups of the largest true-label overlap, over n."""
    groups: dict[object, list] = {}
    for t, g in zip(true_labels, assigned):
        groups.setdefault(g, []).append(t)
    correct = 0
    for members in groups.values():
        best = max(members.count(v) for v in set(members))
        correct += best
    return correct / len(true_labels)
