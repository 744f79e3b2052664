"""Similarity, element/set entropy, the removal differential, and the
entropy-driven clustering of one bounded subset.

The similarity between two vectors is a correlation score rescaled to [0, 1]
(0.5 means uncorrelated). Set entropy treats the positive pairwise scores as
a probability distribution: a set whose similarities are all alike scores
close to 1; structured (multi-modal) similarity profiles score lower.
"""

from dataclasses import dataclass

import numpy as np

from .core import DataError

LOG2 = np.log2


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise scores in [0, 1] with unit diagonal.

    degenerate_rows flags inputs with zero variance, for which the Pearson
    score is undefined and the identical-or-0.5 fallback was applied.
    """

    scores: np.ndarray
    degenerate_rows: tuple[int, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DataError("similarity matrix must be square")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def similarity(v_i, v_j) -> float:
    """Pearson correlation of the two vectors mapped to [0, 1].

    Constant vectors have no correlation; the fallback scores 1 for an
    identical pair and 0.5 (the uncorrelated midpoint) otherwise.
    """
    a = np.asarray(v_i, dtype=np.float64)
    b = np.asarray(v_j, dtype=np.float64)
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.linalg.norm(ac)
    nb = np.linalg.norm(bc)
    if na == 0.0 or nb == 0.0:
        return 1.0 if np.array_equal(a, b) else 0.5
    r = float(np.dot(ac, bc) / (na * nb))
    return min(1.0, max(0.0, 0.5 * (r + 1.0)))


def similarity_matrix(rows) -> SimilarityMatrix:
    """All pairwise similarity scores for the given row vectors."""
    X = np.asarray(rows, dtype=np.float64)
    Xc = X - X.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(Xc, axis=1)
    ok = norms > 0
    Z = np.zeros_like(Xc)
    Z[ok] = Xc[ok] / norms[ok, None]
    S = 0.5 * (Z @ Z.T + 1.0)
    S = 0.5 * (S + S.T)  # exact symmetry
    degenerate = tuple(int(i) for i in np.where(~ok)[0])
    for i in degenerate:
        eq = np.all(X == X[i], axis=1)
        S[i, :] = np.where(eq, 1.0, 0.5)
        S[:, i] = S[i, :]
    np.clip(S, 0.0, 1.0, out=S)
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(S, degenerate)


def element_entropy(sim: SimilarityMatrix, j: int) -> float:
    """Entropy of element j's normalized similarity column, in [0, 1]."""
    col = sim.scores[:, j]
    n = col.shape[0]
    if n < 2:
        return 0.0
    total = col.sum()
    if total <= 0.0:
        return 0.0
    p = col / total
    nz = p[p > 0]
    return float(-(nz * LOG2(nz)).sum() / LOG2(n))


def _positive_pairs(sim: SimilarityMatrix, active) -> np.ndarray:
    idx = np.asarray(sorted(active), dtype=np.intp)
    sub = sim.scores[np.ix_(idx, idx)]
    vals = sub[np.triu_indices(idx.size, k=1)]
    return vals[vals > 0]


def set_entropy(sim: SimilarityMatrix, active) -> float:
    """Diversity of the active subset from its positive pairwise scores.

    The scores are normalized to a distribution; one positive pair or fewer
    carries no diversity and scores 0 by convention.
    """
    s = _positive_pairs(sim, active)
    if s.size <= 1:
        return 0.0
    q = s / s.sum()
    return float(-(q * LOG2(q)).sum() / LOG2(s.size))


def xi(sim: SimilarityMatrix, active, i: int) -> float:
    """Entropy change from removing element i: H(active) - H(active minus i)."""
    active = list(active)
    if i not in active:
        raise ValueError(f"element {i} not in active subset")
    rest = [v for v in active if v != i]
    return set_entropy(sim, active) - set_entropy(sim, rest)


def xi_all(sim: SimilarityMatrix, active) -> np.ndarray:
    """Removal differential for every active element at once.

    Uses pair-sum identities so the whole vector costs O(n^2); must agree
    with per-element xi() to 1e-10 (covered by the oracle tests).
    """
    idx = np.asarray(sorted(active), dtype=np.intp)
    n = idx.size
    sub = sim.scores[np.ix_(idx, idx)]
    mask = ~np.eye(n, dtype=bool)
    pos = (sub > 0) & mask
    sv = np.where(pos, sub, 0.0)
    slog = np.where(pos, sv * LOG2(np.where(pos, sub, 1.0)), 0.0)
    row_sum = sv.sum(axis=1)
    row_log = slog.sum(axis=1)
    row_cnt = pos.sum(axis=1)
    T = row_sum.sum() / 2.0
    U = row_log.sum() / 2.0
    M = int(row_cnt.sum()) // 2

    def entropy_from(total, logsum, pairs):
        if pairs <= 1 or total <= 0.0:
            return 0.0
        return float(-(logsum / total - LOG2(total)) / LOG2(pairs))

    h_full = entropy_from(T, U, M)
    out = np.empty(n)
    for t in range(n):
        out[t] = h_full - entropy_from(
            T - row_sum[t], U - row_log[t], M - int(row_cnt[t])
        )
    return out


# Validation constants for the divisive sweep below. A part needs at least
# MIN_VOTE_POINTS members for its dispersion estimate to be trustworthy;
# a cut is accepted when the whole set's dispersion exceeds the cleanest
# qualifying part's by SPLIT_RATIO (one side became pure), or when the cut
# link's distance is LINK_FACTOR times the chain's median link distance
# (the cut is an outlier against the set's own connectivity scale; this is
# what detects a boundary whose two sides are themselves still mixtures).
# Measured margins on separated Gaussian data: intact sets stay below 2x
# dispersion ratio and 2x link ratio, mixtures exceed 35x and 10x.
MIN_VOTE_POINTS = 6
SPLIT_RATIO = 8.0
LINK_FACTOR = 4.0


def dispersion(sim: SimilarityMatrix, active) -> float | None:
    """Size-normalized spread of the similarity profile: (1 - H) * log2(pairs).

    For a set whose scores share one level this estimates the (tiny) relative
    variance of the scores independent of set size; multi-modal profiles
    score orders of magnitude higher. None when under two positive pairs.
    """
    s = _positive_pairs(sim, active)
    if s.size <= 1:
        return None
    q = s / s.sum()
    h = float(-(q * LOG2(q)).sum() / LOG2(s.size))
    return (1.0 - h) * float(LOG2(s.size))


def similarity_chain(sim: SimilarityMatrix, active) -> tuple[list[int], np.ndarray]:
    """Greedy traversal: start at the max-xi element, then repeatedly hop to
    the unvisited element most similar to the previous one (ties: lower index).

    Returns the visit order and the n-1 link similarities along it. Separated
    groups come out contiguous: the chain exhausts a group before leaving it.
    """
    idx = sorted(active)
    n = len(idx)
    if n == 1:
        return list(idx), np.empty(0)
    sub = sim.scores[np.ix_(np.asarray(idx), np.asarray(idx))]
    xi_vals = xi_all(sim, idx)
    order = np.empty(n, dtype=np.intp)
    order[0] = int(np.argmax(xi_vals))
    unvisited = np.ones(n, dtype=bool)
    unvisited[order[0]] = False
    links = np.empty(n - 1)
    for t in range(1, n):
        cand = np.where(unvisited)[0]
        pick = cand[int(np.argmax(sub[order[t - 1], cand]))]
        links[t - 1] = sub[order[t - 1], pick]
        order[t] = pick
        unvisited[pick] = False
    return [idx[int(o)] for o in order], links


def _bisect(sim: SimilarityMatrix, active: list[int]) -> list[list[int]]:
    if len(active) <= 2:
        return [sorted(active)]
    sub = sim.scores[np.ix_(np.asarray(active), np.asarray(active))]
    off = sub[np.triu_indices(len(active), k=1)]
    if off.max() - off.min() == 0.0:
        return [sorted(active)]  # no similarity gradient: identical-like set
    order, links = similarity_chain(sim, active)
    cut = int(np.argmin(links)) + 1
    left, right = order[:cut], order[cut:]
    d_set = dispersion(sim, active)
    votes = [
        d for part in (left, right)
        if len(part) >= MIN_VOTE_POINTS and (d := dispersion(sim, part)) is not None
    ]
    heterogeneous = (
        d_set is not None
        and bool(votes)
        and (min(votes) == 0.0 or d_set / min(votes) >= SPLIT_RATIO)
        and d_set > 0.0
    )
    if heterogeneous:
        return _bisect(sim, left) + _bisect(sim, right)
    return [sorted(left), sorted(right)]


def entropy_cluster(sim: SimilarityMatrix, seed: int = 0,
                    cap: int | None = None) -> list[list[int]]:
    """Partition one bounded subset by recursive weakest-link bisection.

    The greedy similarity chain visits separated groups contiguously, so the
    chain's weakest link proposes a boundary; the cut is kept only when the
    set's dispersion dwarfs its parts' (the parts are internally far more
    alike than the whole). Sets with no such structure come back as their two
    chain halves, which the merge phase immediately re-pairs; identical-like
    and <=2-point inputs stay whole. Deterministic; the seed is accepted for
    interface stability but the procedure draws nothing from it.

    Returns lists of indices into the similarity matrix, each sorted, in
    discovery order.
    """
    n = sim.n
    if cap is not None and n > cap:
        raise DataError("entropy clustering input exceeds cap")
    if n == 0:
        raise DataError("entropy clustering needs at least one element")
    if n == 1:
        return [[0]]
    return _bisect(sim, list(range(n)))
