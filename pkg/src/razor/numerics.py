"""Shared numeric kernels: k-means, exact KNN, PCA, and convex hulls.

Everything here is pure given its seed; the distance metric is Euclidean
throughout. Hulls above 3 dimensions are never needed (selection works in
2-D component subspaces, aggregation in at most 3-D projections).
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .core import seeded_rng


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, |a|x|b|, without giant temporaries."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = (a * a).sum(axis=1)[:, None] - 2.0 * (a @ b.T) + (b * b).sum(axis=1)[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans(points, k: int, seed: int, max_rounds: int = 100,
           return_history: bool = False):
    """Lloyd iterations over a k-means++ start; returns the assignment vector.

    Empty clusters are repaired by reseeding them to the point currently
    farthest from its own centroid, so every id in 0..k-1 stays non-empty.
    Stops on an assignment fixpoint or after max_rounds.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if k <= 0:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds point count {n}")
    rng = seeded_rng(seed, 0)

    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = squared_distances(X, centers[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(np.argmax(d2))  # all residuals zero: duplicates
        centers[j] = X[idx]
        np.minimum(d2, squared_distances(X, centers[j : j + 1])[:, 0], out=d2)

    assign = np.full(n, -1, dtype=np.int64)
    history = []
    for _ in range(max_rounds):
        dist = squared_distances(X, centers)
        new_assign = np.argmin(dist, axis=1)
        own = dist[np.arange(n), new_assign].copy()
        for j in range(k):
            if not np.any(new_assign == j):
                far = int(np.argmax(own))
                new_assign[far] = j
                own[far] = -np.inf
        if return_history:
            diff = X - centers[new_assign]
            history.append(float((diff * diff).sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            centers[j] = X[assign == j].mean(axis=0)
    if return_history:
        return assign, history
    return assign


def knn(queries, corpus, k: int, exclude_self: bool = False) -> np.ndarray:
    """Exact k nearest neighbours by ascending distance, ties to lower index.

    With exclude_self the query set must be the corpus; row i never returns i.
    """
    Q = np.asarray(queries, dtype=np.float64)
    C = np.asarray(corpus, dtype=np.float64)
    limit = C.shape[0] - (1 if exclude_self else 0)
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} out of range for corpus of {C.shape[0]}")
    d2 = squared_distances(Q, C)
    if exclude_self:
        if Q.shape[0] != C.shape[0]:
            raise ValueError("exclude_self requires queries == corpus")
        np.fill_diagonal(d2, np.inf)
    out = np.empty((Q.shape[0], k), dtype=np.int64)
    cols = np.arange(C.shape[0])
    for i in range(Q.shape[0]):
        out[i] = np.lexsort((cols, d2[i]))[:k]
    return out


def nearest_neighbor(points) -> np.ndarray:
    """1-NN of every row within the same set (self excluded)."""
    return knn(points, points, 1, exclude_self=True)[:, 0]


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray        # m x d, orthonormal columns
    explained_variance: np.ndarray  # d, non-increasing


def pca_fit_transform(points, d: int) -> tuple[PcaModel, np.ndarray]:
    """Principal axes of the centered points plus their scores.

    The effective dimension is min(d, m, rank); each component is sign-fixed
    so its largest-magnitude entry is positive.
    """
    X = np.asarray(points, dtype=np.float64)
    n, m = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    tol = max(n, m) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    d_eff = min(d, m, rank)
    W = vt[:d_eff].T.copy()
    for j in range(d_eff):
        if W[np.argmax(np.abs(W[:, j])), j] < 0:
            W[:, j] = -W[:, j]
    Z = Xc @ W
    var = (s[:d_eff] ** 2) / (n - 1) if n > 1 else np.zeros(d_eff)
    return PcaModel(mean, W, var), Z


@dataclass(frozen=True)
class HullResult:
    vertex_indices: frozenset
    measure: float      # length in 1-D, area in 2-D, volume in 3-D
    dim_used: int       # affine rank actually measured in


def _affine_projection(points: np.ndarray) -> tuple[np.ndarray, int]:
    """Project points onto their affine span; returns (coords, rank)."""
    centered = points - points.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(points.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return centered @ vt[:rank].T, rank


def convex_hull(points) -> HullResult:
    """Exact hull vertex set and measure for points in 1 to 3 dimensions.

    Inputs whose affine rank is below the ambient dimension are re-projected
    onto their span and measured there; dim_used reports the span rank.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] > 3 or P.shape[1] < 1:
        raise ValueError("convex_hull expects an n x d matrix with d in 1..3")
    n, d = P.shape
    if n == 1:
        return HullResult(frozenset({0}), 0.0, 0)
    proj, rank = _affine_projection(P)
    if rank == 0:
        return HullResult(frozenset({0}), 0.0, 0)
    if rank == 1:
        coords = proj[:, 0]
        return HullResult(
            frozenset({int(np.argmin(coords)), int(np.argmax(coords))}),
            float(coords.max() - coords.min()),
            1,
        )
    work = P if rank == d else proj
    try:
        hull = ConvexHull(work)
    except QhullError:
        # numerically flat despite the rank estimate: drop one dimension
        sub = _affine_projection(work)[0][:, : rank - 1]
        res = convex_hull(sub)
        return HullResult(res.vertex_indices, res.measure, res.dim_used)
    return HullResult(frozenset(int(v) for v in hull.vertices), float(hull.volume), rank)


def hull_measure_in_dim(points) -> float:
    """Hull content measured in the full ambient dimension; 0 when degenerate."""
    P = np.asarray(points, dtype=np.float64)
    res = convex_hull(P)
    return res.measure if res.dim_used == P.shape[1] else 0.0
