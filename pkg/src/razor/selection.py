"""Pick the top tau fraction of each final cluster by hull-vertex frequency.

A cluster's key element (the member minimizing mean + std of its distances
to the rest) is always selected first; the remaining members are ranked by
how often they appear as a convex-hull vertex across all 2-D subspaces of
the cluster's leading principal components.
"""

import itertools
from dataclasses import dataclass
from math import ceil

import numpy as np

from .core import FeatureSet, RazorConfig, Clustering, SelectionResult, validate_config
from .numerics import convex_hull, pca_fit_transform, squared_distances


@dataclass(frozen=True)
class ClusterSelection:
    cluster_id: int
    selected: tuple[int, ...]   # global indices, rank order
    n_samp: int


@dataclass(frozen=True)
class ClusterSelectionDetail:
    key_element: int
    frequency: np.ndarray       # hull-vertex counts, aligned with sorted members
    ranked: tuple[int, ...]     # all members in selection order
    n_samp: int


def _distance_stats(points: np.ndarray) -> np.ndarray:
    """Per-member mean + population std of distances to the other members."""
    n = points.shape[0]
    if n == 1:
        return np.zeros(1)
    d = np.sqrt(squared_distances(points, points))
    off = d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    return off.mean(axis=1) + off.std(axis=1)


def key_element(members, fs: FeatureSet) -> int:
    """The most central member: argmin of mean + std of its distances."""
    mem = sorted(int(v) for v in members)
    if len(mem) == 1:
        return mem[0]
    stats = _distance_stats(fs.data[mem])
    return mem[int(np.argmin(stats))]


def vertex_frequency(members, fs: FeatureSet, cfg: RazorConfig) -> np.ndarray:
    """Count hull-vertex appearances over all 2-D principal subspaces.

    The cluster is projected to its top min(pca_sel_dims, rank) components;
    every unordered component pair contributes one 2-D hull. A single
    surviving component degenerates to its two extremes; clusters of one or
    two points score 1 everywhere.
    """
    mem = sorted(int(v) for v in members)
    n = len(mem)
    if n <= 2:
        return np.ones(n, dtype=np.int64)
    _, scores = pca_fit_transform(fs.data[mem], cfg.pca_sel_dims)
    d_eff = scores.shape[1]
    counts = np.zeros(n, dtype=np.int64)
    if d_eff == 0:
        return counts
    if d_eff == 1:
        col = scores[:, 0]
        counts[int(np.argmin(col))] += 1
        counts[int(np.argmax(col))] += 1
        return counts
    for a, b in itertools.combinations(range(d_eff), 2):
        hull = convex_hull(scores[:, [a, b]])
        for v in hull.vertex_indices:
            counts[v] += 1
    return counts


def rank_members(members, fs: FeatureSet, cfg: RazorConfig) -> ClusterSelectionDetail:
    """Full selection order: key element first, then by frequency with
    distance-statistic and index tie-breaks."""
    mem = sorted(int(v) for v in members)
    key = key_element(mem, fs)
    counts = vertex_frequency(mem, fs, cfg)
    stats = _distance_stats(fs.data[mem])
    rest = [
        mem[t]
        for t in sorted(
            (t for t in range(len(mem)) if mem[t] != key),
            key=lambda t: (-counts[t], stats[t], mem[t]),
        )
    ]
    n_samp = min(len(mem), max(1, ceil(cfg.tau * len(mem))))
    return ClusterSelectionDetail(key, counts, tuple([key] + rest), n_samp)


def select_from_cluster(members, fs: FeatureSet, cfg: RazorConfig) -> list[int]:
    detail = rank_members(members, fs, cfg)
    return list(detail.ranked[: detail.n_samp])


def select(clustering: Clustering, fs: FeatureSet, cfg: RazorConfig) -> SelectionResult:
    """Apply the per-cluster selection to every cluster, in cluster order."""
    validate_config(cfg)
    per_cluster = []
    global_indices: list[int] = []
    for k, cluster in enumerate(clustering.clusters):
        picks = select_from_cluster(cluster.members, fs, cfg)
        per_cluster.append(ClusterSelection(k, tuple(picks), len(picks)))
        global_indices.extend(picks)
    return SelectionResult(tuple(per_cluster), tuple(sorted(global_indices)))
