import math
from itertools import permutations

import numpy as np
import pytest
from sklearn.metrics import adjusted_mutual_info_score

from razor.core import DataError, SelectionResult
from razor.metrics import (
    ami,
    balance_report,
    contingency,
    expected_mutual_information,
    segmentation_scores,
)
from razor.selection import ClusterSelection


# --- brute-force E[MI] oracle ---------------------------------------------------

def emi_oracle(a, b):
    """Hypergeometric expected MI via explicit factorials."""
    table = contingency(a, b)
    n = table.total
    fact = math.factorial
    emi = 0.0
    for ai in table.row_sums.tolist():
        for bj in table.col_sums.tolist():
            for nij in range(max(1, ai + bj - n), min(ai, bj) + 1):
                prob = (
                    fact(ai) * fact(bj) * fact(n - ai) * fact(n - bj)
                ) / (
                    fact(n) * fact(nij) * fact(ai - nij)
                    * fact(bj - nij) * fact(n - ai - bj + nij)
                )
                emi += (nij / n) * math.log(n * nij / (ai * bj)) * prob
    return emi


def ami_oracle(a, b):
    table = contingency(a, b)
    n = table.total
    h = []
    for marg in (table.row_sums, table.col_sums):
        p = marg[marg > 0] / n
        h.append(float(-(p * np.log(p)).sum()))
    mi = 0.0
    for i, ai in enumerate(table.row_sums.tolist()):
        for j, bj in enumerate(table.col_sums.tolist()):
            nij = table.counts[i, j]
            if nij:
                mi += (nij / n) * math.log(n * nij / (ai * bj))
    emi = emi_oracle(a, b)
    return (mi - emi) / (0.5 * (h[0] + h[1]) - emi)


class TestAmi:
    def test_identical_labelings(self):
        labels = [0, 1, 2, 0, 1, 2, 2]
        assert ami(labels, labels) == pytest.approx(1.0, abs=1e-12)

    def test_constant_versus_balanced_is_zero(self):
        assert ami([0, 0, 0, 0], [0, 0, 1, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_both_constant_is_one(self):
        assert ami([3, 3, 3], [7, 7, 7]) == 1.0

    def test_small_case_matches_factorial_oracle(self):
        a = [0, 0, 1, 1]
        b = [0, 1, 1, 1]
        assert expected_mutual_information(contingency(a, b)) == pytest.approx(
            emi_oracle(a, b), abs=1e-12
        )
        assert ami(a, b) == pytest.approx(ami_oracle(a, b), abs=1e-12)

    def test_matches_scikit_learn_on_random_labelings(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(4, 60))
            a = rng.integers(0, int(rng.integers(2, 6)), size=n)
            b = rng.integers(0, int(rng.integers(2, 6)), size=n)
            assert ami(a, b) == pytest.approx(
                adjusted_mutual_info_score(a, b), abs=1e-9
            )

    def test_symmetric_and_label_renaming_invariant(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 4, size=40)
        b = rng.integers(0, 3, size=40)
        assert ami(a, b) == pytest.approx(ami(b, a), abs=1e-12)
        renamed = np.array([2, 0, 3, 1])[a]
        assert ami(renamed, b) == pytest.approx(ami(a, b), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            ami([0, 1], [0, 1, 2])


class TestSegmentation:
    def test_perfect_prediction(self):
        truth = [0, 1, 2, 1, 0]
        report = segmentation_scores(truth, truth)
        for scores in report["per_class"].values():
            assert scores["iou"] == 1.0 and scores["dice"] == 1.0
            assert scores["overlap_rate"] == 1.0 and scores["f1"] == 1.0
        assert report["macro"]["iou"] == 1.0

    def test_disjoint_masks_zero(self):
        report = segmentation_scores([1, 1, 0, 0], [0, 0, 1, 1])
        assert report["per_class"][1]["iou"] == 0.0
        assert report["per_class"][1]["dice"] == 0.0

    def test_four_pixel_example(self):
        report = segmentation_scores([0, 0, 1, 1], [0, 1, 1, 1])
        c1 = report["per_class"][1]
        assert c1["iou"] == pytest.approx(2 / 3)
        assert c1["dice"] == pytest.approx(4 / 5)
        assert c1["overlap_rate"] == pytest.approx(2 / 3)
        assert c1["f1"] == c1["dice"]

    def test_truth_absent_class_excluded_from_macro(self):
        report = segmentation_scores([0, 2, 1, 1], [0, 0, 1, 1], classes=[0, 1, 2])
        assert report["per_class"][2]["overlap_rate"] is None
        macro_members = [
            report["per_class"][c]["iou"] for c in (0, 1)
        ]
        assert report["macro"]["iou"] == pytest.approx(np.mean(macro_members))

    def test_dice_identity_against_iou(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(2, 50))
            pred = rng.integers(0, 3, size=n)
            truth = rng.integers(0, 3, size=n)
            report = segmentation_scores(pred, truth)
            for scores in report["per_class"].values():
                iou, dice = scores["iou"], scores["dice"]
                assert dice == pytest.approx(2 * iou / (1 + iou), abs=1e-12)

    def test_scores_bounded(self):
        rng = np.random.default_rng(3)
        pred = rng.integers(0, 4, size=100)
        truth = rng.integers(0, 4, size=100)
        report = segmentation_scores(pred, truth)
        for scores in report["per_class"].values():
            for key, value in scores.items():
                if value is not None:
                    assert 0.0 <= value <= 1.0


class TestBalance:
    def _selection(self, indices):
        return SelectionResult(
            (ClusterSelection(0, tuple(indices), len(indices)),),
            tuple(sorted(indices)),
        )

    def test_full_selection_has_zero_std(self):
        truth = [0, 0, 1, 1, 2, 2]
        report = balance_report(self._selection(range(6)), truth)
        assert report["mean"] == 1.0 and report["std"] == 0.0

    def test_uniform_random_selection_near_tau(self):
        rng = np.random.default_rng(4)
        truth = np.repeat(np.arange(4), 500)
        picks = rng.choice(2000, size=200, replace=False)
        report = balance_report(self._selection(picks.tolist()), truth)
        assert report["mean"] == pytest.approx(0.1, abs=0.02)

    def test_per_class_fractions(self):
        truth = [0, 0, 1, 1]
        report = balance_report(self._selection([0, 2, 3]), truth)
        assert report["per_class_fraction"] == {0: 0.5, 1: 1.0}
        assert report["std"] == pytest.approx(0.25)

    def test_out_of_range_selection_rejected(self):
        with pytest.raises(DataError):
            balance_report(self._selection([5]), [0, 1])
