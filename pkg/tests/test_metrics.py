import numpy as np
import pytest

from icgtm.errors import MetricError
from icgtm.models import OUTLIER, UNKNOWN, CorrespondenceSet, Homography, MatchResult
from icgtm.services.metric_service import consistency_weights, evaluate, weighted_prf

IDENTITY = Homography.from_matrix(np.eye(3))


def _result(labels):
    k = max([l for l in labels if l >= 0], default=-1) + 1
    return MatchResult(tuple(range(len(labels))), tuple(labels), (IDENTITY,) * k)


def _truth(labels):
    return dict(enumerate(labels))


def _unbalanced_truth():
    return [0] * 90 + [1] * 10 + [OUTLIER] * 20


def test_weight_values():
    weights, w_outlier = consistency_weights([0, 0, 0, OUTLIER])
    assert weights.tolist() == [1.0]
    assert w_outlier == 1.0

    weights, _ = consistency_weights([0] * 50 + [1] * 50)
    np.testing.assert_allclose(weights, [0.5, 0.5])

    weights, w_outlier = consistency_weights([0] * 90 + [1] * 10)
    assert weights[0] == pytest.approx(0.310, abs=1e-3)
    assert weights[1] == pytest.approx(0.690, abs=1e-3)
    assert w_outlier == weights[1]
    assert weights.sum() == pytest.approx(1.0)


def test_weights_need_inliers():
    with pytest.raises(MetricError):
        consistency_weights([OUTLIER, OUTLIER])


def test_perfect_result():
    truth = _unbalanced_truth()
    report = weighted_prf(_result(truth), _truth(truth))
    assert (report.precision, report.recall, report.f_measure) == (1.0, 1.0, 1.0)
    assert report.w_precision == report.w_recall == 1.0
    assert report.w_f_measure == pytest.approx(1.0)
    assert (report.tp, report.fp, report.fn) == (100, 0, 0)
    assert (report.k_pred, report.k_true) == (2, 2)
    assert report.cluster_accuracy == 1.0
    assert report.degenerate == ()


def test_all_outlier_prediction_is_degenerate():
    truth = _unbalanced_truth()
    report = weighted_prf(_result([OUTLIER] * len(truth)), _truth(truth))
    assert report.recall == report.w_recall == 0.0
    assert report.precision == 0.0
    assert {"P", "W-P", "F", "W-F", "cluster_accuracy"} <= set(report.degenerate)
    assert "degenerate=" in report.to_kv()


def test_single_consistency_reduces_to_classic(rng):
    for _ in range(20):
        truth = np.where(rng.random(60) < 0.7, 0, OUTLIER).tolist()
        truth[0] = 0
        pred = np.where(rng.random(60) < 0.6, 0, OUTLIER).tolist()
        report = weighted_prf(_result(pred), _truth(truth))
        assert report.w_precision == report.precision
        assert report.w_recall == report.recall
        assert report.w_f_measure == report.f_measure


def test_missing_small_consistency_costs_more_when_weighted():
    truth = _unbalanced_truth()
    pred = [0] * 90 + [OUTLIER] * 10 + [OUTLIER] * 20
    report = weighted_prf(_result(pred), _truth(truth))
    assert report.recall == pytest.approx(0.9)
    assert report.f_measure == pytest.approx(2 * 0.9 / 1.9)
    assert 1.0 - report.w_f_measure > 1.0 - report.f_measure
    assert report.w_recall == pytest.approx(0.802, abs=1e-3)


def test_missing_large_share_of_big_consistency_costs_less_when_weighted():
    truth = _unbalanced_truth()
    pred = [0] * 80 + [OUTLIER] * 10 + [1] * 10 + [OUTLIER] * 20
    report = weighted_prf(_result(pred), _truth(truth))
    assert report.recall == pytest.approx(0.9)
    assert report.w_recall > report.recall


def test_false_positives_use_outlier_weight():
    truth = [0] * 90 + [1] * 10 + [OUTLIER] * 20
    pred = [0] * 100 + [0] * 5 + [OUTLIER] * 15
    report = weighted_prf(_result(pred), _truth(truth))
    assert report.fp == 5
    assert report.w_fp == pytest.approx(5 * report.w_outlier)


def test_literal_f_flag():
    truth = _unbalanced_truth()
    pred = [0] * 90 + [OUTLIER] * 30
    standard = weighted_prf(_result(pred), _truth(truth))
    literal = weighted_prf(_result(pred), _truth(truth), paper_literal_f=True)
    assert literal.f_measure == pytest.approx(0.9 / 1.9)
    assert literal.f_measure == pytest.approx(standard.f_measure / 2)


def test_unknown_truth_is_skipped():
    truth = [0] * 10 + [UNKNOWN] * 5
    pred = [0] * 10 + [OUTLIER] * 5
    report = weighted_prf(_result(pred), _truth(truth))
    assert (report.tp, report.fp, report.fn) == (10, 0, 0)


def test_result_must_cover_truth():
    with pytest.raises(MetricError):
        weighted_prf(_result([0, 0]), _truth([0, 0, 0]))


def test_cluster_accuracy_uses_majority_owner():
    truth = [0] * 6 + [1] * 4
    # predicted cluster 0 mixes 6 of consistency 0 with 2 of consistency 1
    pred = [0] * 6 + [0, 0, 1, 1]
    report = weighted_prf(_result(pred), _truth(truth))
    assert report.cluster_accuracy == pytest.approx(0.8)
    assert report.tp == 10


def test_evaluate_needs_ground_truth(small_scene):
    cset = small_scene.correspondences
    plain = CorrespondenceSet(cset.items, cset.image_size_left, cset.image_size_right)
    result = small_scene.planted_result()
    with pytest.raises(MetricError):
        evaluate(result, plain)
    assert evaluate(result, cset).w_f_measure == pytest.approx(1.0)


def test_kv_report_lists_every_value():
    truth = _unbalanced_truth()
    text = weighted_prf(_result(truth), _truth(truth)).to_kv()
    keys = [line.split("=")[0] for line in text.splitlines()]
    assert keys == ["P", "R", "F", "W-P", "W-R", "W-F", "K_pred", "K_true", "TP", "FP", "FN", "cluster_accuracy"]
    assert "P=1.000000" in text.splitlines()
