"""End-to-end clustering: initial partitioning, iterative split-and-merge
with nIOU convergence, and final convex-hull aggregation.

Results are a pure function of (features, config.seed): worker count and
scheduling cannot change any output byte.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import entropy
from .core import (
    Clustering,
    DataError,
    FeatureSet,
    RazorConfig,
    STREAM_PARTITION,
    clustering_from_members,
    seeded_rng,
    validate_config,
)
from .numerics import (
    hull_measure_in_dim,
    kmeans,
    nearest_neighbor,
    pca_fit_transform,
    squared_distances,
)


@dataclass
class IterationRecord:
    iteration: int
    n_clusters: int
    d_conv: float
    seconds: float


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged_at: int | None = None

    def as_dict(self) -> dict:
        return {
            "converged_at": self.converged_at,
            "iterations": [
                {
                    "iteration": r.iteration,
                    "n_clusters": r.n_clusters,
                    "d_conv": r.d_conv,
                    "seconds": r.seconds,
                }
                for r in self.records
            ],
        }


def chunk_evenly(members: list[int], cap: int) -> list[list[int]]:
    """Split a sorted member list into ceil(len/cap) near-equal chunks."""
    if len(members) <= cap:
        return [list(members)]
    parts = -(-len(members) // cap)
    return [list(chunk) for chunk in np.array_split(np.asarray(members), parts)]


def partition_plan(n: int, cfg: RazorConfig) -> list[tuple[np.ndarray, int]]:
    """The (group indices, k) pairs the initial partition will run k-means on.

    Above the k-means cap the indices are shuffled by the seeded stream and
    chunked into ceil(n / cap) contiguous groups; each group requests
    ceil(|group| / n_entcls) clusters.
    """
    if n == 0:
        raise DataError("cannot partition an empty feature set")
    if n > cfg.n_kmeans_cap:
        order = seeded_rng(cfg.seed, STREAM_PARTITION).permutation(n)
        groups = np.array_split(order, -(-n // cfg.n_kmeans_cap))
    else:
        groups = [np.arange(n)]
    return [(group, -(-len(group) // cfg.n_entcls)) for group in groups]


def initial_partition(fs: FeatureSet, cfg: RazorConfig) -> Clustering:
    """Seeded shuffle + capped per-group k-means + size splitting.

    Groups larger than the k-means cap never form; every output cluster has
    at most n_entcls members.
    """
    validate_config(cfg)
    member_lists: list[list[int]] = []
    for gi, (group, k) in enumerate(partition_plan(fs.n, cfg)):
        assign = kmeans(fs.data[group], k, seed=_group_seed(cfg.seed, gi))
        for j in range(k):
            members = sorted(int(v) for v in group[assign == j])
            member_lists.extend(chunk_evenly(members, cfg.n_entcls))
    return clustering_from_members(member_lists, fs.data)


def _group_seed(seed: int, group_index: int) -> int:
    from .core import derive_seed

    return derive_seed(seed, STREAM_PARTITION, group_index)


# --- split phase -----------------------------------------------------------

_WORKER_DATA: np.ndarray | None = None


def _pool_init(data: np.ndarray) -> None:
    global _WORKER_DATA
    _WORKER_DATA = data


def _split_one(members: list[int], data: np.ndarray) -> list[list[int]]:
    sim = entropy.similarity_matrix(data[members])
    local = entropy.entropy_cluster(sim)
    arr = np.asarray(members)
    return [sorted(int(v) for v in arr[part]) for part in local]


def _split_chunk(chunk: list[list[int]]) -> list[list[list[int]]]:
    return [_split_one(members, _WORKER_DATA) for members in chunk]


def split_phase(clustering: Clustering, fs: FeatureSet, cfg: RazorConfig,
                pool: ProcessPoolExecutor | None = None) -> Clustering:
    """Replace every cluster by its entropy sub-partition.

    Sub-results are concatenated in ascending parent order, so the output is
    identical no matter how many workers computed them.
    """
    parents = clustering.member_lists()
    if pool is None:
        results = [_split_one(m, fs.data) for m in parents]
    else:
        chunks = _even_chunks(parents, pool._max_workers * 4)
        results = []
        for batch in pool.map(_split_chunk, chunks):
            results.extend(batch)
    member_lists = [part for sub in results for part in sub]
    return clustering_from_members(member_lists, fs.data)


def _even_chunks(items: list, n_chunks: int) -> list[list]:
    n_chunks = max(1, min(n_chunks, len(items)))
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    return [items[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


# --- merge phase -----------------------------------------------------------

def merge_phase(clustering: Clustering, fs: FeatureSet, cfg: RazorConfig) -> Clustering:
    """Pair each cluster with its nearest-centroid neighbour, greedily.

    Traversal is in ascending cluster index; a pair merges only when neither
    side was already merged this pass. Unions beyond n_entcls are re-split
    into near-equal chunks. Fewer than two clusters pass through unchanged.
    """
    k = len(clustering)
    if k < 2:
        return clustering
    nn = nearest_neighbor(clustering.centroid_matrix())
    consumed = np.zeros(k, dtype=bool)
    partner: dict[int, int] = {}
    for i in range(k):
        if consumed[i]:
            continue
        j = int(nn[i])
        if not consumed[j]:
            consumed[i] = consumed[j] = True
            partner[min(i, j)] = max(i, j)
    drop = set(partner.values())
    members = clustering.member_lists()
    out: list[list[int]] = []
    for i in range(k):
        if i in drop:
            continue
        if i in partner:
            merged = sorted(members[i] + members[partner[i]])
            out.extend(chunk_evenly(merged, cfg.n_entcls))
        else:
            out.append(members[i])
    return clustering_from_members(out, fs.data)


# --- convergence -----------------------------------------------------------

def _directional_overlap(from_c: Clustering, to_c: Clustering) -> float:
    """Mean IoU of each cluster in from_c with its centroid-nearest in to_c."""
    d2 = squared_distances(from_c.centroid_matrix(), to_c.centroid_matrix())
    nearest = np.argmin(d2, axis=1)  # ties resolve to the lower index
    to_sets = [set(c.members) for c in to_c.clusters]
    total = 0.0
    for i, c in enumerate(from_c.clusters):
        mine = set(c.members)
        other = to_sets[int(nearest[i])]
        total += len(mine & other) / len(mine | other)
    return total / len(from_c)


def niou(c1: Clustering, c2: Clustering) -> float:
    """Symmetric nearest-cluster IoU blended with a cluster-count penalty.

    1 means identical clusterings; the penalty term discounts disparity in
    cluster counts.
    """
    if c1.source_n != c2.source_n:
        raise DataError("clusterings cover different instance sets")
    avg_overlap = 0.5 * (_directional_overlap(c2, c1) + _directional_overlap(c1, c2))
    n1, n2 = len(c1), len(c2)
    penalty = (n1 + n2) / (2.0 * max(n1, n2))
    return (avg_overlap + penalty) / 2.0


def run_iterations(fs: FeatureSet, cfg: RazorConfig,
                   pool: ProcessPoolExecutor | None = None
                   ) -> tuple[Clustering, IterationTrace]:
    """Alternate split and merge until nIOU convergence or the iteration cap.

    The merge is skipped on the last allowed iteration, so a capped run ends
    on a pure refinement.
    """
    validate_config(cfg)
    current = initial_partition(fs, cfg)
    trace = IterationTrace()
    result = current
    for t in range(1, cfg.max_iter + 1):
        started = time.perf_counter()
        candidate = split_phase(current, fs, cfg, pool=pool)
        if t < cfg.max_iter:
            candidate = merge_phase(candidate, fs, cfg)
        d_conv = 1.0 - niou(current, candidate)
        trace.records.append(
            IterationRecord(t, len(candidate), d_conv, time.perf_counter() - started)
        )
        result = candidate
        if d_conv < cfg.epsilon:
            trace.converged_at = t
            break
        current = candidate
    return result, trace


# --- final aggregation -----------------------------------------------------

def compatibility(members_i: list[int], members_j: list[int],
                  fs: FeatureSet, cfg: RazorConfig) -> float:
    """Hull-volume ratio of two clusters after a shared 3-D projection.

    Tiny clusters (under 3 points) are unconditionally compatible. The union
    is projected once with PCA and both parts are measured in that space; if
    the union itself is degenerate the measurement happens in its affine
    span, and a part that is flat inside the measured space contributes 0.
    """
    if len(members_i) < 3 or len(members_j) < 3:
        return 1.0
    union = sorted(members_i + members_j)
    model, z_union = pca_fit_transform(fs.data[union], cfg.pca_agg_dims)
    if z_union.shape[1] == 0:
        return 1.0  # all points coincide
    position = {v: t for t, v in enumerate(union)}
    z_i = z_union[[position[v] for v in members_i]]
    z_j = z_union[[position[v] for v in members_j]]
    v_union = hull_measure_in_dim(z_union)
    if v_union <= 0.0:
        return 1.0
    return (hull_measure_in_dim(z_i) + hull_measure_in_dim(z_j)) / v_union


def final_aggregate(clustering: Clustering, fs: FeatureSet,
                    cfg: RazorConfig) -> Clustering:
    """Repeatedly merge nearest-neighbour pairs whose hull compatibility
    clears th_phi, best pairs first, until a pass makes no merge.

    No size cap applies here; merged clusters may exceed n_entcls.
    """
    members = clustering.member_lists()
    while len(members) >= 2:
        centroids = np.stack([fs.data[m].mean(axis=0) for m in members])
        nn = nearest_neighbor(centroids)
        scored = [
            (i, int(nn[i]), compatibility(members[i], members[int(nn[i])], fs, cfg))
            for i in range(len(members))
        ]
        scored.sort(key=lambda rec: (-rec[2], rec[0], rec[1]))
        consumed = np.zeros(len(members), dtype=bool)
        partner: dict[int, int] = {}
        for i, j, phi in scored:
            if phi < cfg.th_phi:
                break
            if not consumed[i] and not consumed[j]:
                consumed[i] = consumed[j] = True
                partner[min(i, j)] = max(i, j)
        if not partner:
            break
        drop = set(partner.values())
        merged: list[list[int]] = []
        for i in range(len(members)):
            if i in drop:
                continue
            if i in partner:
                merged.append(sorted(members[i] + members[partner[i]]))
            else:
                merged.append(members[i])
        members = merged
    return clustering_from_members(members, fs.data)


def razor_cluster(fs: FeatureSet, cfg: RazorConfig
                  ) -> tuple[Clustering, IterationTrace]:
    """The full pipeline: iterate split/merge, then aggregate by hull shape."""
    validate_config(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            initializer=_pool_init,
            initargs=(fs.data,),
        ) as pool:
            iterated, trace = run_iterations(fs, cfg, pool=pool)
    else:
        iterated, trace = run_iterations(fs, cfg, pool=None)
    return final_aggregate(iterated, fs, cfg), trace
