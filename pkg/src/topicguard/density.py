"""Density-based clustering of the reduced layout (HDBSCAN-style).

Stages: core distances (distance to the min_samples-th nearest neighbor,
self excluded), mutual reachability ``max(core_a, core_b, d(a, b))``, an
exact minimum spanning tree over that metric (Prim), a single-linkage
dendrogram, a condensed tree where subtrees smaller than min_cluster_size
become individual point falls, excess-of-mass cluster selection over
stability (the root is never selectable), and finally labels, exemplars,
and softmax affinities over exemplar centroids.

Noise points carry label -1.  All steps are deterministic; ties break
toward lower point indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .reducer import pairwise_sq_distances


@dataclass(frozen=True)
class MstEdge:
    a: int
    b: int
    weight: float


@dataclass
class SingleLinkage:
    """scipy-style merge table: leaf ids 0..n-1, internal ids n..2n-2.

    Row t merges nodes ``left[t]`` and ``right[t]`` at height ``weight[t]``
    into node ``n + t`` of ``size[t]`` points.
    """

    n_points: int
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    size: np.ndarray


@dataclass
class CondensedTree:
    """Parent/child rows; children below n_points are point falls.

    The root cluster has id ``n_points``.  ``lam`` is 1/distance at the
    moment the child separated from the parent (inf for zero distance).
    """

    n_points: int
    min_cluster_size: int
    parent: np.ndarray
    child: np.ndarray
    lam: np.ndarray
    size: np.ndarray


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    n_clusters: int
    exemplars: list[np.ndarray]
    stabilities: list[float]


@dataclass
class AffinityVector:
    app_id: str | None
    affinities: np.ndarray
    assigned_topic: int


def core_distances(X: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance to each point's min_samples-th nearest neighbor."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= min_samples < n:
        raise ValueError(f"min_samples must satisfy 1 <= min_samples < n, "
                         f"got {min_samples} with n={n}")
    D = np.sqrt(pairwise_sq_distances(X))
    core = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = np.sort(D[i])
        # row[0] is the self distance; duplicates keep their extra zeros
        core[i] = row[1:][min_samples - 1]
    return core


def mutual_reachability_mst(X: np.ndarray,
                            core: np.ndarray) -> list[MstEdge]:
    """Prim MST over mutual reachability, rows generated on the fly."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("MST needs at least 2 points")
    D = np.sqrt(pairwise_sq_distances(X))
    in_tree = np.zeros(n, dtype=bool)
    best = np.maximum(np.maximum(core, core[0]), D[0])
    closest = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.inf
    edges: list[MstEdge] = []
    for _ in range(n - 1):
        j = int(np.argmin(best))
        edges.append(MstEdge(a=int(closest[j]), b=j, weight=float(best[j])))
        in_tree[j] = True
        row = np.maximum(np.maximum(core, core[j]), D[j])
        improve = (~in_tree) & (row < best)
        best[improve] = row[improve]
        closest[improve] = j
        best[j] = np.inf
    return edges


def single_linkage(edges: list[MstEdge], n_points: int) -> SingleLinkage:
    """Replay MST edges in weight order through a union-find."""
    order = sorted(range(len(edges)),
                   key=lambda e: (edges[e].weight,
                                  min(edges[e].a, edges[e].b),
                                  max(edges[e].a, edges[e].b)))
    parent = np.arange(2 * n_points - 1, dtype=np.int64)
    node_size = np.ones(2 * n_points - 1, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    left = np.empty(n_points - 1, dtype=np.int64)
    right = np.empty(n_points - 1, dtype=np.int64)
    weight = np.empty(n_points - 1, dtype=np.float64)
    size = np.empty(n_points - 1, dtype=np.int64)
    for t, e_idx in enumerate(order):
        e = edges[e_idx]
        ra, rb = find(e.a), find(e.b)
        new = n_points + t
        left[t], right[t] = min(ra, rb), max(ra, rb)
        weight[t] = e.weight
        size[t] = node_size[ra] + node_size[rb]
        parent[ra] = parent[rb] = new
        node_size[new] = size[t]
    return SingleLinkage(n_points=n_points, left=left, right=right,
                         weight=weight, size=size)


def _leaves_under(link: SingleLinkage, node: int) -> list[int]:
    out: list[int] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur < link.n_points:
            out.append(cur)
        else:
            row = cur - link.n_points
            stack.append(int(link.right[row]))
            stack.append(int(link.left[row]))
    return out


def condense_tree(link: SingleLinkage,
                  min_cluster_size: int) -> CondensedTree:
    """Collapse the dendrogram: subtrees below min_cluster_size fall out.

    Walking top-down, a split where both sides reach min_cluster_size makes
    two new clusters; a split where only one side does lets the big side
    keep its parent's identity and drops the small side's points one by one
    at the split's lambda.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    n = link.n_points
    root = 2 * n - 2
    relabel = {root: n}
    next_label = n + 1
    rows: list[tuple[int, int, float, int]] = []

    def node_size(node: int) -> int:
        return 1 if node < n else int(link.size[node - n])

    # top-down BFS; only surviving cluster nodes are ever queued
    queue = [root]
    while queue:
        node = queue.pop(0)
        row = node - n
        lam = 1.0 / link.weight[row] if link.weight[row] > 0.0 else np.inf
        children = (int(link.left[row]), int(link.right[row]))
        counts = (node_size(children[0]), node_size(children[1]))
        big = [c >= min_cluster_size for c in counts]
        if big[0] and big[1]:
            for child, count in zip(children, counts):
                relabel[child] = next_label
                rows.append((relabel[node], next_label, lam, count))
                next_label += 1
                queue.append(child)
        elif not big[0] and not big[1]:
            for child in children:
                for leaf in sorted(_leaves_under(link, child)):
                    rows.append((relabel[node], leaf, lam, 1))
        else:
            keep = children[0] if big[0] else children[1]
            drop = children[1] if big[0] else children[0]
            relabel[keep] = relabel[node]
            for leaf in sorted(_leaves_under(link, drop)):
                rows.append((relabel[node], leaf, lam, 1))
            queue.append(keep)
    parent = np.array([r[0] for r in rows], dtype=np.int64)
    child = np.array([r[1] for r in rows], dtype=np.int64)
    lam = np.array([r[2] for r in rows], dtype=np.float64)
    size = np.array([r[3] for r in rows], dtype=np.int64)
    return CondensedTree(n_points=n, min_cluster_size=min_cluster_size,
                         parent=parent, child=child, lam=lam, size=size)


def cluster_stabilities(tree: CondensedTree) -> dict[int, float]:
    """stability(c) = sum over members of (fall_lambda - birth_lambda)."""
    births: dict[int, float] = {tree.n_points: 0.0}
    for p, c, lam in zip(tree.parent, tree.child, tree.lam):
        if c >= tree.n_points:
            births[int(c)] = float(lam)
    stability = {c: 0.0 for c in births}
    for p, lam, size in zip(tree.parent, tree.lam, tree.size):
        stability[int(p)] += (float(lam) - births[int(p)]) * int(size)
    return stability


def select_clusters_eom(tree: CondensedTree
                        ) -> tuple[list[int], dict[int, float]]:
    """Excess-of-mass selection, bottom-up, root excluded.

    A cluster survives when its own stability is at least the sum of its
    children's (propagated) stabilities; otherwise the children's total
    replaces it.  Returns selected cluster ids (sorted) and the final
    per-cluster stability map.
    """
    stability = cluster_stabilities(tree)
    cluster_children: dict[int, list[int]] = {c: [] for c in stability}
    for p, c in zip(tree.parent, tree.child):
        if c >= tree.n_points:
            cluster_children[int(p)].append(int(c))
    is_selected = {c: True for c in stability}
    is_selected[tree.n_points] = False
    propagated = dict(stability)
    for node in sorted(stability, reverse=True):
        if node == tree.n_points:
            continue
        kids = cluster_children[node]
        subtree = sum(propagated[k] for k in kids)
        if kids and propagated[node] < subtree:
            is_selected[node] = False
            propagated[node] = subtree
        else:
            # this node wins; nothing below it may stay selected
            stack = list(kids)
            while stack:
                k = stack.pop()
                is_selected[k] = False
                stack.extend(cluster_children[k])
    selected = sorted(c for c, flag in is_selected.items() if flag)
    return selected, stability


def assign_labels(tree: CondensedTree, selected: list[int],
                  stability: dict[int, float]) -> ClusterAssignment:
    """Map points to the selected ancestor of their fall, else noise."""
    cluster_parent: dict[int, int] = {}
    for p, c in zip(tree.parent, tree.child):
        if c >= tree.n_points:
            cluster_parent[int(c)] = int(p)
    selected_set = set(selected)
    label_of = {c: i for i, c in enumerate(selected)}
    n = tree.n_points
    labels = np.full(n, -1, dtype=np.int64)
    fall_lambda = np.zeros(n, dtype=np.float64)
    for p, c, lam in zip(tree.parent, tree.child, tree.lam):
        if c < n:
            fall_lambda[int(c)] = float(lam)
            node = int(p)
            while node is not None:
                if node in selected_set:
                    labels[int(c)] = label_of[node]
                    break
                node = cluster_parent.get(node)
    exemplars: list[np.ndarray] = []
    stabilities: list[float] = []
    for c in selected:
        members = np.flatnonzero(labels == label_of[c])
        peak = fall_lambda[members].max()
        exemplars.append(members[fall_lambda[members] == peak])
        stabilities.append(float(stability[c]))
    return ClusterAssignment(labels=labels, n_clusters=len(selected),
                             exemplars=exemplars, stabilities=stabilities)


def extract_clusters(mst: list[MstEdge], n_points: int,
                     min_cluster_size: int) -> ClusterAssignment:
    """Labels, exemplars, and stabilities from a mutual-reachability MST."""
    link = single_linkage(mst, n_points)
    tree = condense_tree(link, min_cluster_size)
    selected, stability = select_clusters_eom(tree)
    return assign_labels(tree, selected, stability)


def cluster_points(X: np.ndarray, min_cluster_size: int = 10,
                   min_samples: int = 10) -> ClusterAssignment:
    """Full pipeline from points to labels, exemplars, and stabilities."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise NumericError("clustering needs at least 2 points")
    ms = min(min_samples, n - 1)
    core = core_distances(X, ms)
    mst = mutual_reachability_mst(X, core)
    return extract_clusters(mst, n, min_cluster_size)


def exemplar_centroids(X: np.ndarray,
                       assignment: ClusterAssignment) -> np.ndarray:
    """Mean of each cluster's exemplar points."""
    X = np.asarray(X, dtype=np.float64)
    if assignment.n_clusters == 0:
        return np.zeros((0, X.shape[1]), dtype=np.float64)
    return np.stack([X[ex].mean(axis=0) for ex in assignment.exemplars])


def affinity_temperature(centroids: np.ndarray) -> float:
    """Mean pairwise centroid distance; 1.0 when fewer than 2 centroids."""
    c = centroids.shape[0]
    if c < 2:
        return 1.0
    total, count = 0.0, 0
    for i in range(c):
        for j in range(i + 1, c):
            total += float(np.sqrt(np.sum((centroids[i] - centroids[j]) ** 2)))
            count += 1
    return total / count


def affinities_from_centroids(points: np.ndarray, centroids: np.ndarray,
                              temperature: float) -> np.ndarray:
    """Rows of exp(-d / temperature), normalized to sum to 1."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if centroids.shape[0] == 0:
        raise NumericError("no cluster centroids to compute affinities "
                           "against")
    diffs = points[:, None, :] - centroids[None, :, :]
    d = np.sqrt((diffs * diffs).sum(axis=2))
    w = np.exp(-d / temperature)
    return w / w.sum(axis=1, keepdims=True)


def soft_membership(X: np.ndarray, assignment: ClusterAssignment,
                    app_ids: list[str] | None = None) -> list[AffinityVector]:
    """Affinity of every point to every cluster's exemplar centroid."""
    centroids = exemplar_centroids(X, assignment)
    if centroids.shape[0] == 0:
        raise NumericError("cannot compute soft membership without clusters")
    temp = affinity_temperature(centroids)
    aff = affinities_from_centroids(X, centroids, temp)
    out = []
    for i in range(aff.shape[0]):
        out.append(AffinityVector(
            app_id=app_ids[i] if app_ids is not None else None,
            affinities=aff[i],
            assigned_topic=int(np.argmax(aff[i]))))
    return out
