"""Clustering agreement (AMI), per-class segmentation scores, and the
class-balance report for a selection."""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import DataError, SelectionResult


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray      # r x c
    row_sums: np.ndarray
    col_sums: np.ndarray
    total: int


def contingency(a, b) -> ContingencyTable:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise DataError("label vectors must be equal-length and non-empty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r, c = ai.max() + 1, bi.max() + 1
    counts = np.zeros((r, c), dtype=np.int64)
    np.add.at(counts, (ai, bi), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0), int(a.size))


def _entropy(marginal: np.ndarray, total: int) -> float:
    p = marginal[marginal > 0] / total
    return float(-(p * np.log(p)).sum())


def _mutual_information(table: ContingencyTable) -> float:
    n = table.counts
    nz = n > 0
    outer = table.row_sums[:, None] * table.col_sums[None, :]
    terms = n[nz] / table.total * np.log(table.total * n[nz] / outer[nz])
    return float(terms.sum())


def expected_mutual_information(table: ContingencyTable) -> float:
    """E[MI] under the fixed-marginals permutation (hypergeometric) model."""
    a = table.row_sums.astype(np.float64)
    b = table.col_sums.astype(np.float64)
    n = float(table.total)
    log_fact = gammaln  # gammaln(x + 1) = log(x!)
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = int(max(1, ai + bj - n))
            hi = int(min(ai, bj))
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_term = np.log(n * nij / (ai * bj))
            log_prob = (
                log_fact(ai + 1) + log_fact(bj + 1)
                + log_fact(n - ai + 1) + log_fact(n - bj + 1)
                - log_fact(n + 1) - log_fact(nij + 1)
                - log_fact(ai - nij + 1) - log_fact(bj - nij + 1)
                - log_fact(n - ai - bj + nij + 1)
            )
            emi += float((nij / n * log_term * np.exp(log_prob)).sum())
    return emi


def ami(a, b) -> float:
    """Adjusted mutual information with the arithmetic-mean normalizer.

    Chance-corrected agreement of two labelings; 1 for identical partitions,
    around 0 for independent ones. Two constant labelings are the same
    single-block partition and score 1.
    """
    table = contingency(a, b)
    h_a = _entropy(table.row_sums, table.total)
    h_b = _entropy(table.col_sums, table.total)
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    mi = _mutual_information(table)
    emi = expected_mutual_information(table)
    denominator = 0.5 * (h_a + h_b) - emi
    return (mi - emi) / denominator


def segmentation_scores(pred, truth, classes=None) -> dict:
    """Per-class IoU, Dice, overlap rate, and F1, plus macro means.

    The macro mean covers only classes present in the ground truth; for a
    truth-absent class the overlap rate is undefined and reported as None.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise DataError("label vectors must be equal-length")
    if classes is None:
        classes = sorted(set(np.unique(pred)) | set(np.unique(truth)))
    per_class: dict = {}
    macro_pool = []
    for c in classes:
        in_pred = pred == c
        in_truth = truth == c
        tp = int(np.sum(in_pred & in_truth))
        fp = int(np.sum(in_pred & ~in_truth))
        fn = int(np.sum(~in_pred & in_truth))
        denom = tp + fp + fn
        iou = tp / denom if denom else 0.0
        dice = 2 * tp / (2 * tp + fp + fn) if denom else 0.0
        truth_size = int(in_truth.sum())
        overlap = tp / truth_size if truth_size else None
        scores = {"iou": iou, "dice": dice, "overlap_rate": overlap, "f1": dice}
        per_class[int(c)] = scores
        if truth_size:
            macro_pool.append(scores)
    if not macro_pool:
        raise DataError("no class present in the ground truth")
    macro = {
        key: float(np.mean([s[key] for s in macro_pool]))
        for key in ("iou", "dice", "overlap_rate", "f1")
    }
    return {"per_class": per_class, "macro": macro}


def balance_report(selection: SelectionResult, truth) -> dict:
    """Fraction of each class that was selected, with mean and population std."""
    truth = np.asarray(truth)
    picked = np.zeros(truth.size, dtype=bool)
    indices = np.asarray(selection.global_indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= truth.size):
        raise DataError("selection indices outside the labeled range")
    picked[indices] = True
    classes = np.unique(truth)
    fractions = {int(c): float(picked[truth == c].mean()) for c in classes}
    values = np.array(list(fractions.values()))
    return {
        "per_class_fraction": fractions,
        "mean": float(values.mean()),
        "std": float(values.std()),
    }
