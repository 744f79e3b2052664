import numpy as np
import pytest

from conftest import blob_pair
from razor.core import DataError, FeatureSet, RazorConfig, clustering_from_members
from razor.pipeline import (
    chunk_evenly,
    compatibility,
    final_aggregate,
    initial_partition,
    merge_phase,
    niou,
    partition_plan,
    razor_cluster,
    run_iterations,
    split_phase,
)
from razor.synth import SyntheticSpec, generate


def assert_partition(clustering, n):
    seen = sorted(v for c in clustering.clusters for v in c.members)
    assert seen == list(range(n))


SMALL = RazorConfig(seed=0)


class TestInitialPartition:
    def test_fifty_points_single_cluster(self):
        fs = FeatureSet(np.random.default_rng(0).standard_normal((50, 4)))
        clustering = initial_partition(fs, SMALL)
        assert len(clustering) == 1
        assert_partition(clustering, 50)

    def test_plan_requests_thousand_clusters_at_default_scale(self):
        plan = partition_plan(100000, RazorConfig(seed=1))
        assert len(plan) == 1
        group, k = plan[0]
        assert len(group) == 100000 and k == 1000

    def test_plan_shuffles_and_chunks_above_cap(self):
        cfg = RazorConfig(n_kmeans_cap=1000, n_entcls=10, seed=2)
        plan = partition_plan(2500, cfg)
        assert [len(g) for g, _ in plan] == [834, 833, 833]
        assert [k for _, k in plan] == [84, 84, 84]
        combined = np.concatenate([g for g, _ in plan])
        assert sorted(combined.tolist()) == list(range(2500))
        assert not np.array_equal(combined, np.arange(2500))

    def test_no_cluster_exceeds_cap(self):
        fs = FeatureSet(np.random.default_rng(3).standard_normal((250, 3)))
        clustering = initial_partition(fs, RazorConfig(seed=3))
        assert max(c.size for c in clustering.clusters) <= 100
        assert_partition(clustering, 250)

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            partition_plan(0, SMALL)


class TestChunkEvenly:
    def test_split_150_into_75s(self):
        chunks = chunk_evenly(list(range(150)), 100)
        assert [len(c) for c in chunks] == [75, 75]

    def test_near_equal_sizes(self):
        chunks = chunk_evenly(list(range(250)), 100)
        assert [len(c) for c in chunks] == [84, 83, 83]

    def test_under_cap_untouched(self):
        assert chunk_evenly([3, 5, 9], 100) == [[3, 5, 9]]


class TestSplitPhase:
    def test_two_blob_cluster_splits_blob_pure(self):
        data, labels = blob_pair(1, n_per=25)
        fs = FeatureSet(data)
        clustering = clustering_from_members([list(range(50))], fs.data)
        result = split_phase(clustering, fs, SMALL)
        assert len(result) > 1
        for c in result.clusters:
            assert len(set(labels[list(c.members)])) == 1
        assert_partition(result, 50)

    def test_output_count_never_decreases(self):
        rng = np.random.default_rng(4)
        fs = FeatureSet(rng.standard_normal((60, 5)))
        clustering = clustering_from_members(
            [list(range(30)), list(range(30, 60))], fs.data
        )
        result = split_phase(clustering, fs, SMALL)
        assert len(result) >= len(clustering)
        assert_partition(result, 60)


class TestMergePhase:
    def test_two_clusters_merge(self):
        fs = FeatureSet(np.array([[0.0], [0.1], [0.2], [0.3]]))
        clustering = clustering_from_members([[0, 1], [2, 3]], fs.data)
        merged = merge_phase(clustering, fs, SMALL)
        assert len(merged) == 1
        assert merged.clusters[0].members == (0, 1, 2, 3)

    def test_hand_traced_pairing(self):
        # three clusters on a line: nn(A)=B, nn(B)=A, nn(C)=B -> A+B merge,
        # C stays because its neighbour was consumed
        fs = FeatureSet(np.array([[0.0], [1.0], [3.0]]))
        clustering = clustering_from_members([[0], [1], [2]], fs.data)
        merged = merge_phase(clustering, fs, SMALL)
        assert merged.member_lists() == [[0, 1], [2]]

    def test_untouched_cluster_can_be_claimed_later(self):
        # nn(0)=1, nn(1)=0, nn(2)=3(consumed later path): craft distances so
        # cluster 2's neighbour is 1 (consumed), cluster 3's neighbour is 2
        fs = FeatureSet(np.array([[0.0], [0.4], [1.1], [1.5]]))
        clustering = clustering_from_members([[0], [1], [2], [3]], fs.data)
        merged = merge_phase(clustering, fs, SMALL)
        # 0+1 merge; 2's nn is 3 after 1 consumed? distances: 2->1 is 0.7,
        # 2->3 is 0.4 so nn(2)=3, both free -> merge too
        assert merged.member_lists() == [[0, 1], [2, 3]]

    def test_oversized_union_rechunked(self):
        rng = np.random.default_rng(5)
        fs = FeatureSet(rng.standard_normal((150, 2)) * 0.01)
        clustering = clustering_from_members(
            [list(range(75)), list(range(75, 150))], fs.data
        )
        merged = merge_phase(clustering, fs, SMALL)
        assert [c.size for c in merged.clusters] == [75, 75]
        assert_partition(merged, 150)

    def test_single_cluster_identity(self):
        fs = FeatureSet(np.zeros((5, 2)))
        clustering = clustering_from_members([list(range(5))], fs.data)
        assert merge_phase(clustering, fs, SMALL) is clustering


class TestNiou:
    def test_identical_clusterings_score_one(self):
        rng = np.random.default_rng(6)
        fs = FeatureSet(rng.standard_normal((20, 3)))
        clustering = clustering_from_members([list(range(10)), list(range(10, 20))], fs.data)
        assert niou(clustering, clustering) == pytest.approx(1.0, abs=1e-15)

    def test_hand_case_0_625(self, tiny_features):
        one = clustering_from_members([[0, 1, 2, 3]], tiny_features.data)
        two = clustering_from_members([[0, 1], [2, 3]], tiny_features.data)
        assert niou(one, two) == pytest.approx(0.625, abs=1e-12)
        assert niou(two, one) == pytest.approx(0.625, abs=1e-12)

    def test_symmetric_on_random_partitions(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(4, 30))
            data = rng.standard_normal((n, 3))
            labels_a = rng.integers(0, int(rng.integers(2, 5)), size=n)
            labels_b = rng.integers(0, int(rng.integers(2, 5)), size=n)
            members_a = [np.where(labels_a == v)[0].tolist()
                         for v in np.unique(labels_a)]
            members_b = [np.where(labels_b == v)[0].tolist()
                         for v in np.unique(labels_b)]
            ca = clustering_from_members(members_a, data)
            cb = clustering_from_members(members_b, data)
            forward = niou(ca, cb)
            assert 0.0 <= forward <= 1.0
            assert forward == pytest.approx(niou(cb, ca), abs=1e-12)

    def test_mismatched_sets_rejected(self):
        a = clustering_from_members([[0, 1]], np.zeros((2, 2)))
        b = clustering_from_members([[0, 1, 2]], np.zeros((3, 2)))
        with pytest.raises(DataError):
            niou(a, b)


class TestRunIterations:
    def test_stable_single_cluster_stops_immediately(self):
        rng = np.random.default_rng(8)
        center = rng.standard_normal(6)
        fs = FeatureSet(center + rng.standard_normal((50, 6)) * 0.01)
        _, trace = run_iterations(fs, RazorConfig(seed=8))
        assert trace.converged_at == 1
        assert trace.records[0].d_conv < 0.05

    def test_twenty_blobs_converge_within_cap(self):
        fs, labels = generate(SyntheticSpec(20, 30, 64, 0.01, seed=9))
        result, trace = run_iterations(fs, RazorConfig(seed=9))
        assert trace.converged_at is not None and trace.converged_at <= 10
        assert trace.records[-1].d_conv < 0.05
        assert_partition(result, fs.n)

    def test_trace_bounded_by_max_iter(self):
        fs, _ = generate(SyntheticSpec(5, 20, 8, 0.3, seed=10))
        cfg = RazorConfig(max_iter=3, seed=10)
        _, trace = run_iterations(fs, cfg)
        assert len(trace.records) <= 3
        assert all(0.0 <= r.d_conv <= 1.0 for r in trace.records)


class TestCompatibility:
    def test_tiny_cluster_scores_one(self, tiny_features):
        assert compatibility([0, 1], [2, 3], tiny_features, SMALL) == 1.0

    def test_identical_cube_corner_sets_score_two(self):
        corners = np.array([[x, y, z] for x in (0.0, 1.0)
                            for y in (0.0, 1.0) for z in (0.0, 1.0)])
        fs = FeatureSet(np.vstack([corners, corners]))
        phi = compatibility(list(range(8)), list(range(8, 16)), fs, SMALL)
        assert phi == pytest.approx(2.0, rel=1e-9)

    def test_distant_tetrahedra_incompatible(self):
        tetra = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                          [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        fs = FeatureSet(np.vstack([tetra, tetra + 100.0]))
        phi = compatibility(list(range(4)), list(range(4, 8)), fs, SMALL)
        assert phi < 0.1

    def test_coincident_points_score_one(self):
        fs = FeatureSet(np.ones((8, 3)))
        assert compatibility(list(range(4)), list(range(4, 8)), fs, SMALL) == 1.0

    def test_degenerate_union_measured_in_span(self):
        # two co-planar squares: volumes vanish in 3-D but areas are finite
        square = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                           [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
        fs = FeatureSet(np.vstack([square, square]))
        phi = compatibility(list(range(4)), list(range(4, 8)), fs, SMALL)
        assert phi == pytest.approx(2.0, rel=1e-9)


class TestFinalAggregate:
    def test_distant_clusters_untouched(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((20, 3)) * 0.05
        b = rng.standard_normal((20, 3)) * 0.05 + 50.0
        fs = FeatureSet(np.vstack([a, b]))
        clustering = clustering_from_members(
            [list(range(20)), list(range(20, 40))], fs.data
        )
        result = final_aggregate(clustering, fs, SMALL)
        assert result.member_lists() == clustering.member_lists()

    def test_artificially_split_blob_remerges(self):
        rng = np.random.default_rng(12)
        blob = rng.standard_normal((40, 3))
        fs = FeatureSet(blob)
        halves = [list(range(0, 40, 2)), list(range(1, 40, 2))]
        clustering = clustering_from_members(halves, fs.data)
        result = final_aggregate(clustering, fs, SMALL)
        assert len(result) == 1

    def test_cluster_count_never_increases(self):
        fs, _ = generate(SyntheticSpec(6, 15, 8, 0.05, seed=13))
        clustering, _ = run_iterations(fs, RazorConfig(seed=13))
        result = final_aggregate(clustering, fs, RazorConfig(seed=13))
        assert len(result) <= len(clustering)
        assert_partition(result, fs.n)


class TestRazorCluster:
    def test_single_point(self):
        fs = FeatureSet(np.array([[1.0, 2.0]]))
        clustering, trace = razor_cluster(fs, SMALL)
        assert clustering.member_lists() == [[0]]
        assert trace.converged_at == 1

    def test_recovers_synthetic_blobs(self):
        fs, labels = generate(SyntheticSpec(10, 30, 32, 0.01, seed=14))
        clustering, trace = razor_cluster(fs, RazorConfig(seed=14))
        assert trace.converged_at is not None
        assert len(clustering) == 10
        for c in clustering.clusters:
            assert len(set(labels[list(c.members)])) == 1

    def test_partition_after_every_stage(self):
        fs, _ = generate(SyntheticSpec(5, 25, 16, 0.02, seed=15))
        cfg = RazorConfig(seed=15)
        stage = initial_partition(fs, cfg)
        assert_partition(stage, fs.n)
        stage = split_phase(stage, fs, cfg)
        assert_partition(stage, fs.n)
        stage = merge_phase(stage, fs, cfg)
        assert_partition(stage, fs.n)
        stage = final_aggregate(stage, fs, cfg)
        assert_partition(stage, fs.n)

    def test_worker_count_does_not_change_result(self):
        fs, _ = generate(SyntheticSpec(6, 20, 16, 0.01, seed=16))
        serial, trace_serial = razor_cluster(fs, RazorConfig(seed=16, workers=1))
        pooled, trace_pooled = razor_cluster(fs, RazorConfig(seed=16, workers=2))
        assert serial.member_lists() == pooled.member_lists()
        assert trace_serial.converged_at == trace_pooled.converged_at
