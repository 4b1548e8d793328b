"""Spatial localization of flagged samples and detection scoring.

Flagged survey samples are mapped to ground-projected sensor positions
and grouped with HDBSCAN: mutual-reachability distances (k equal to the
minimum cluster size), a minimum spanning tree built by Prim's method,
the condensed cluster hierarchy, and excess-of-mass selection.  Selected
clusters born closer than ``min_split_distance`` are merged upward into
their enclosing ancestor, which keeps one physical detection from
shattering into micro-clusters while leaving genuinely separate
detections (different survey lines, different mines) apart.

Cluster centroids are compared against true mine positions with the
1-meter true-positive rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_MIN_CLUSTER_SIZE = 5
#: selected clusters born below this mutual-reachability distance (m) are
#: merged into their enclosing ancestor cluster
DEFAULT_MIN_SPLIT_DISTANCE = 0.5


@dataclass
class DetectionCluster:
    """One localized detection: centroid, size, and member samples."""

    center: np.ndarray          # (3,), z = 0
    member_count: int
    member_indices: np.ndarray


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


def _mutual_reachability_mst(points, core):
    """Prim's MST over implicit mutual-reachability distances.

    O(n^2) time, O(n) memory; returns (u, v, weight) arrays of the n-1
    edges in insertion order.
    """
    n = len(points)
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    best_src = np.zeros(n, dtype=np.int64)
    us = np.empty(n - 1, dtype=np.int64)
    vs = np.empty(n - 1, dtype=np.int64)
    ws = np.empty(n - 1)
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        d = np.hypot(points[:, 0] - points[current, 0],
                     points[:, 1] - points[current, 1])
        mr = np.maximum(np.maximum(d, core), core[current])
        closer = mr < best
        best[closer] = mr[closer]
        best_src[closer] = current
        best[in_tree] = np.inf
        nxt = int(np.argmin(best))
        us[step] = best_src[nxt]
        vs[step] = nxt
        ws[step] = best[nxt]
        in_tree[nxt] = True
        current = nxt
    return us, vs, ws


def _single_linkage(us, vs, ws, n):
    """Merge MST edges ascending into a dendrogram.

    Returns (children, distances, sizes): internal node n+i merges
    children[i] at distances[i].
    """
    order = np.argsort(ws, kind="stable")
    parent = np.arange(2 * n - 1, dtype=np.int64)
    size = np.ones(2 * n - 1, dtype=np.int64)
    children = np.empty((n - 1, 2), dtype=np.int64)
    distances = np.empty(n - 1)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for i, e in enumerate(order):
        ra, rb = find(us[e]), find(vs[e])
        node = n + i
        children[i] = (ra, rb)
        distances[i] = ws[e]
        parent[ra] = parent[rb] = node
        size[node] = size[ra] + size[rb]
    return children, distances, size


def _condense(children, distances, sizes, n, min_cluster_size):
    """Condensed cluster tree from the dendrogram.

    Clusters persist while shedding fewer than ``min_cluster_size``
    points; a merge of two big-enough components is a true split.  For
    each condensed cluster: parent id, birth lambda (1 / split distance),
    accumulated stability; for each point: the cluster it fell out of and
    its exit lambda.
    """
    root_dnode = n + len(children) - 1
    cluster_parent = [-1]
    birth_lambda = [0.0]
    stability = [0.0]
    point_cluster = np.full(n, -1, dtype=np.int64)
    point_lambda = np.zeros(n)

    def leaves(dnode):
        out = []
        stack = [dnode]
        while stack:
            k = stack.pop()
            if k < n:
                out.append(k)
            else:
                stack.extend(children[k - n])
        return out

    stack = [(root_dnode, 0)]
    while stack:
        dnode, cid = stack.pop()
        if dnode < n:
            # singleton continuation: the point exits when its own merge
            # distance is reached; handled by the parent cases below
            continue
        left, right = children[dnode - n]
        dist = distances[dnode - n]
        lam = 1.0 / dist if dist > 0.0 else np.inf
        big_left = sizes[left] >= min_cluster_size
        big_right = sizes[right] >= min_cluster_size
        if big_left and big_right:
            for side in (left, right):
                new_id = len(cluster_parent)
                cluster_parent.append(cid)
                birth_lambda.append(lam)
                stability.append(0.0)
                stability[cid] += sizes[side] * (lam - birth_lambda[cid])
                stack.append((side, new_id))
        elif big_left or big_right:
            keep, shed = (left, right) if big_left else (right, left)
            for p in leaves(shed):
                point_cluster[p] = cid
                point_lambda[p] = lam
                stability[cid] += lam - birth_lambda[cid]
            stack.append((keep, cid))
        else:
            for p in leaves(dnode):
                point_cluster[p] = cid
                point_lambda[p] = lam
                stability[cid] += lam - birth_lambda[cid]
    return (np.array(cluster_parent), np.array(birth_lambda),
            np.array(stability), point_cluster, point_lambda)


def _select_eom(cluster_parent, stability):
    """Excess-of-mass selection over non-root condensed clusters."""
    n_clusters = len(cluster_parent)
    child_sum = np.zeros(n_clusters)
    selected = np.zeros(n_clusters, dtype=bool)
    subtree = np.zeros(n_clusters)
    for cid in range(n_clusters - 1, 0, -1):
        if stability[cid] >= child_sum[cid]:
            selected[cid] = True
            subtree[cid] = stability[cid]
        else:
            subtree[cid] = child_sum[cid]
        child_sum[cluster_parent[cid]] += subtree[cid]
    # keep only the topmost selected clusters
    for cid in range(1, n_clusters):
        if not selected[cid]:
            continue
        anc = cluster_parent[cid]
        while anc > 0:
            if selected[anc]:
                selected[cid] = False
                break
            anc = cluster_parent[anc]
    return selected


def _merge_shallow_clusters(selected, cluster_parent, birth_lambda, min_split):
    """Promote clusters born closer than ``min_split`` to their ancestor.

    The climb may reach the root, which is how a lone dense cloud ends up
    as a single cluster instead of shattering.
    """
    if min_split <= 0.0:
        return selected
    out = np.zeros_like(selected)
    for cid in np.flatnonzero(selected):
        target = cid
        while target > 0 and 1.0 / birth_lambda[target] < min_split:
            target = cluster_parent[target]
        out[target] = True
    # deduplicate nesting introduced by the climbs
    for cid in np.flatnonzero(out):
        anc = cluster_parent[cid]
        while anc >= 0:
            if out[anc]:
                out[cid] = False
                break
            anc = cluster_parent[anc]
    return out


def hdbscan(points, min_cluster_size=DEFAULT_MIN_CLUSTER_SIZE,
            min_split_distance=DEFAULT_MIN_SPLIT_DISTANCE):
    """Density-based clustering with noise; returns labels (-1 = noise).

    Cluster ids are assigned in lexicographic centroid order so the
    labeling does not depend on point input order.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    n = len(points)
    labels = np.full(n, -1, dtype=np.int64)
    if n < min_cluster_size:
        return labels
    tree = cKDTree(points)
    k = min(min_cluster_size + 1, n)
    core = tree.query(points, k=k)[0][:, -1]
    us, vs, ws = _mutual_reachability_mst(points, core)
    children, distances, sizes = _single_linkage(us, vs, ws, n)
    (cluster_parent, birth_lambda, stability,
     point_cluster, point_lambda) = _condense(children, distances, sizes,
                                              n, min_cluster_size)
    selected = _select_eom(cluster_parent, stability)
    selected = _merge_shallow_clusters(selected, cluster_parent, birth_lambda,
                                       min_split_distance)
    if not selected.any():
        return labels
    # a point belongs to the first selected cluster on its upward chain
    assign = np.full(len(cluster_parent), -1, dtype=np.int64)
    for cid in range(len(cluster_parent)):
        cur = cid
        while cur >= 0:
            if selected[cur]:
                assign[cid] = cur
                break
            cur = cluster_parent[cur]
    raw = assign[point_cluster]
    ids = np.unique(raw[raw >= 0])
    centroids = [points[raw == cid].mean(axis=0) for cid in ids]
    order = sorted(range(len(ids)), key=lambda i: tuple(centroids[i]))
    for new, old in enumerate(order):
        labels[raw == ids[old]] = new
    return labels


def detect_positions(record, scores, threshold,
                     min_cluster_size=DEFAULT_MIN_CLUSTER_SIZE,
                     min_split_distance=DEFAULT_MIN_SPLIT_DISTANCE):
    """Cluster ground positions of samples whose score reaches threshold.

    ``scores`` may be a confidence series (threshold in (0, 1]) or a
    deviation series in nT (threshold in nT).  Returns detection clusters
    sorted by centroid.
    """
    scores = np.asarray(scores, dtype=float)
    if len(scores) != len(record.times):
        raise ValueError("scores length must match the record")
    idx = np.flatnonzero(scores >= threshold)
    if len(idx) == 0:
        return []
    pts = record.positions1[idx][:, :2]
    labels = hdbscan(pts, min_cluster_size, min_split_distance)
    clusters = []
    for cid in range(labels.max() + 1 if labels.size else 0):
        members = labels == cid
        center_xy = pts[members].mean(axis=0)
        clusters.append(DetectionCluster(
            center=np.array([center_xy[0], center_xy[1], 0.0]),
            member_count=int(members.sum()),
            member_indices=idx[members],
        ))
    return clusters


def hard_threshold_detector(cleaned, limit):
    """Flag samples deviating more than ``limit`` nT from the median."""
    cleaned = np.asarray(cleaned, dtype=float)
    if limit <= 0:
        raise ValueError("limit must be positive")
    return np.abs(cleaned - np.median(cleaned)) > limit


def score_detections(clusters, mines, radius=1.0):
    """Confusion counts and per-true-positive localization errors.

    A cluster within ``radius`` (horizontal) of any mine is a true
    positive, scored by the distance to its nearest mine; other clusters
    are false positives.  Mines with no cluster inside the radius are
    false negatives.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    mine_xy = np.array([m.position[:2] for m in mines]) if mines else np.zeros((0, 2))
    counts = ConfusionCounts()
    errors = []
    matched = np.zeros(len(mine_xy), dtype=bool)
    for cluster in clusters:
        if len(mine_xy) == 0:
            counts.fp += 1
            continue
        dists = np.hypot(*(mine_xy - cluster.center[:2]).T)
        nearest = int(np.argmin(dists))
        if dists[nearest] <= radius:
            counts.tp += 1
            errors.append(float(dists[nearest]))
            matched[nearest] = True
        else:
            counts.fp += 1
    counts.fn = int(len(mine_xy) - matched.sum())
    return counts, errors
