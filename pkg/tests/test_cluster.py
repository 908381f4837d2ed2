import numpy as np
import pytest

from conftest import make_correspondence, random_set
from icgtm.config import ClusterConfig, PayoffParams, SynthConfig
from icgtm.models import OUTLIER, CorrespondenceSet, Homography, MatchResult
from icgtm.services.cluster_service import (
    cluster_threshold,
    extract_cluster,
    extract_clusters,
    prune_clusters,
    recompute_payoff_matrix,
    recover_inliers,
    recovered_clusters,
)
from icgtm.services.payoff_service import PayoffMatrix
from icgtm.services.pipeline_service import prepare_inputs
from icgtm.services.scene_service import generate_scene


def _matrix(values):
    values = np.asarray(values, dtype=float)
    return PayoffMatrix(values, tuple(range(len(values))))


def _symmetric(rng, n):
    a = rng.random((n, n))
    values = a + a.T
    np.fill_diagonal(values, 0.0)
    return values


def test_threshold_is_midpoint_of_active_entries():
    m = _matrix([[0.0, 0.2, 1.0], [0.2, 0.0, 1.0], [1.0, 1.0, 0.0]])
    assert cluster_threshold(m) == pytest.approx(0.6)
    assert cluster_threshold(_matrix(np.full((3, 3), 0.4) - np.diag([0.4] * 3))) == pytest.approx(0.4)
    assert cluster_threshold(_matrix([[0.0]])) is None


def test_threshold_ignores_removed_rows():
    m = _matrix([[0.0, 0.2, 1.0], [0.2, 0.0, 1.0], [1.0, 1.0, 0.0]])
    assert cluster_threshold(m, {2}) == pytest.approx(0.2)
    assert cluster_threshold(m, {1, 2}) is None


def test_threshold_matches_scan(rng):
    for _ in range(50):
        n = int(rng.integers(2, 12))
        values = _symmetric(rng, n)
        removed = set(rng.choice(n, int(rng.integers(0, n - 1)), replace=False).tolist())
        entries = [values[i, j] for i in range(n) for j in range(n) if i != j and i not in removed and j not in removed]
        assert cluster_threshold(_matrix(values), removed) == pytest.approx((max(entries) + min(entries)) / 2)


def test_dominant_clique_is_extracted():
    values = np.full((8, 8), 0.1)
    clique = [1, 3, 4, 6]
    values[np.ix_(clique, clique)] = 2.0
    values[1, 3] = values[3, 1] = 2.5
    np.fill_diagonal(values, 0.0)
    extraction = extract_cluster(_matrix(values), set(), ClusterConfig())
    assert extraction.anchor == (1, 3)
    assert extraction.member_indices == (1, 3, 4, 6)
    assert extraction.threshold == pytest.approx(1.3)


def test_all_zero_matrix_terminates():
    assert extract_cluster(_matrix(np.zeros((5, 5))), set(), ClusterConfig()) is None


def test_anchor_ties_go_to_lowest_pair():
    values = np.full((5, 5), 1.0)
    np.fill_diagonal(values, 0.0)
    values[0, 1] = values[1, 0] = 0.5
    extraction = extract_cluster(_matrix(values), set(), ClusterConfig())
    assert extraction.anchor == (0, 2)


def test_small_groups_stop_extraction():
    values = np.full((6, 6), 0.1)
    values[0, 1] = values[1, 0] = 3.0
    np.fill_diagonal(values, 0.0)
    assert extract_cluster(_matrix(values), set(), ClusterConfig()) is None


def test_either_membership_gathers_more():
    values = np.full((6, 6), 0.1)
    values[0, 1] = values[1, 0] = 3.0
    values[0, 2:4] = values[2:4, 0] = 2.0
    values[1, 4:6] = values[4:6, 1] = 2.0
    np.fill_diagonal(values, 0.0)
    m = _matrix(values)
    assert extract_cluster(m, set(), ClusterConfig(membership="both")) is None
    assert extract_cluster(m, set(), ClusterConfig(membership="either")).member_indices == (0, 1, 2, 3, 4, 5)


def test_recompute_for_single_candidate(rng):
    cset = random_set(rng, 3)
    m = recompute_payoff_matrix(cset, [2], PayoffParams())
    assert m.values.tolist() == [[0.0]]
    assert m.indices == (2,)


def _translation_set():
    # two translations and two stray correspondences on a 200x200 image
    items = [make_correspondence(i, (10 + 9 * (i % 5), 10 + 9 * (i // 5)), (60 + 9 * (i % 5), 10 + 9 * (i // 5)))
             for i in range(10)]
    items.append(make_correspondence(10, (150, 150), (120, 180)))
    items.append(make_correspondence(11, (150, 160), (20, 20)))
    return CorrespondenceSet(tuple(items), (200, 200), (200, 200))


def test_recover_inliers_threshold_is_strict():
    cset = _translation_set()
    shift = Homography.from_matrix(np.array([[1.0, 0.0, 50.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    cfg = ClusterConfig(reproj_threshold=5.0)
    near = make_correspondence(12, (100, 100), (150, 100 + 5.0 - 1e-9))
    far = make_correspondence(13, (100, 120), (150, 120 + 5.0 + 1e-9))
    exact = make_correspondence(14, (100, 140), (150, 145))
    cset = CorrespondenceSet(cset.items + (near, far, exact), (200, 200), (200, 200))
    result = recover_inliers(cset, [shift], cfg)
    labels = result.label_map()
    assert [labels[i] for i in range(10)] == [0] * 10
    assert labels[10] == labels[11] == OUTLIER
    assert (labels[12], labels[13], labels[14]) == (0, OUTLIER, OUTLIER)


def test_recover_inliers_is_idempotent():
    cset = _translation_set()
    shift = Homography.from_matrix(np.array([[1.0, 0.0, 50.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    first = recover_inliers(cset, [shift], ClusterConfig())
    assert recover_inliers(cset, first.homographies, ClusterConfig()) == first


def test_no_homographies_means_all_outliers():
    cset = _translation_set()
    result = recover_inliers(cset, [], ClusterConfig())
    assert result.labels == (OUTLIER,) * len(cset)
    assert result.num_clusters == 0


def test_best_homography_wins():
    cset = _translation_set()
    shift = Homography.from_matrix(np.array([[1.0, 0.0, 50.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    nearly = Homography.from_matrix(np.array([[1.0, 0.0, 52.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    result = recover_inliers(cset, [nearly, shift], ClusterConfig())
    assert [result.label_map()[i] for i in range(10)] == [1] * 10


def test_prune_drops_weak_clusters():
    cset = _translation_set()
    shift = Homography.from_matrix(np.array([[1.0, 0.0, 50.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    stray = Homography.from_matrix(np.array([[1.0, 0.0, -30.0], [0.0, 1.0, 30.0], [0.0, 0.0, 1.0]]))
    result = recover_inliers(cset, [stray, shift], ClusterConfig())
    assert result.cluster_sizes() == [1, 10]
    pruned = prune_clusters(cset, result, ClusterConfig(min_support=8))
    assert pruned.num_clusters == 1
    assert pruned.homographies == (shift,)
    assert pruned.label_map()[10] == OUTLIER
    assert prune_clusters(cset, result, ClusterConfig(min_support=0)) == result


def test_clusters_on_planted_scene():
    scene = generate_scene(SynthConfig(k=3, inliers_per=100, outlier_ratio=0.3, seed=21))
    cset, params = prepare_inputs(scene.correspondences, PayoffParams())
    truth = cset.truth_labels()
    candidates = cset.indices[truth >= 0].tolist()
    cfg = ClusterConfig()
    clusters = extract_clusters(cset, candidates, params, cfg)
    assert 1 <= len(clusters) <= len(candidates) // cfg.min_cluster_size

    members = [i for c in clusters for i in c.member_indices]
    assert len(members) == len(set(members))
    for c in clusters:
        assert len(c.member_indices) >= cfg.min_cluster_size
        assert 0 < c.inlier_count <= len(c.member_indices)


def test_too_few_candidates_yield_nothing(rng):
    cset, params = prepare_inputs(random_set(rng, 3), PayoffParams())
    assert extract_clusters(cset, [0, 1, 2], params, ClusterConfig()) == []


def test_zero_clusters_recover_to_outliers(rng):
    cset = random_set(rng, 6)
    result = recover_inliers(cset, [], ClusterConfig())
    assert isinstance(result, MatchResult)
    assert not result.inlier_mask().any()


def _single_consistency_candidates():
    scene = generate_scene(SynthConfig(k=1, inliers_per=60, outlier_ratio=0.2, descriptor_dim=16, seed=4))
    cset, params = prepare_inputs(scene.correspondences, PayoffParams())
    candidates = cset.indices[cset.truth_labels() >= 0].tolist()
    return cset, params, candidates, scene.planted[0]


def test_group_repeating_an_accepted_transformation_is_dropped():
    cset, params, candidates, planted = _single_consistency_candidates()
    assert extract_clusters(cset, candidates, params, ClusterConfig(), [planted]) == []
    kept = extract_clusters(cset, candidates, params, ClusterConfig(drop_redundant=False), [planted])
    assert len(kept) >= 1


def test_unrelated_accepted_transformation_keeps_the_group():
    cset, params, candidates, _ = _single_consistency_candidates()
    far = Homography.from_matrix(np.array([[1.0, 0.0, 1000.0], [0.0, 1.0, 1000.0], [0.0, 0.0, 1.0]]))
    assert len(extract_clusters(cset, candidates, params, ClusterConfig(), [far])) >= 1


def test_recovered_clusters_follow_the_labels():
    cset = _translation_set()
    shift = Homography.from_matrix(np.array([[1.0, 0.0, 50.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    stray = Homography.from_matrix(np.array([[1.0, 0.0, -30.0], [0.0, 1.0, 30.0], [0.0, 0.0, 1.0]]))
    result = recover_inliers(cset, [stray, shift], ClusterConfig())
    clusters = recovered_clusters(result)
    assert [c.homography for c in clusters] == [stray, shift]
    assert [c.inlier_count for c in clusters] == result.cluster_sizes() == [1, 10]
    assert clusters[1].member_indices == tuple(range(10))
