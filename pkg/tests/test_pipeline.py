from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from icgtm.config import ClusterConfig, PayoffMode, PayoffParams, RunConfig, SynthConfig
from icgtm.errors import ConfigError
from icgtm.models import OUTLIER, UNASSIGNED, CorrespondenceSet
from icgtm.services.block_service import assign_blocks, match_blocks
from icgtm.services.game_service import play_all_games
from icgtm.services.metric_service import evaluate
from icgtm.services.pipeline_service import (
    prepare_inputs,
    run_gtm_baseline,
    run_method,
    run_pipeline,
    run_ransac_baseline,
)
from icgtm.services.scene_service import generate_scene
from icgtm.utils.timing import StageTimer

SEEDS = range(10)


@lru_cache(maxsize=None)
def _scene(k, seed, outlier_ratio=0.4):
    return generate_scene(SynthConfig(k=k, inliers_per=100, outlier_ratio=outlier_ratio, noise_sigma=1.0,
                                      descriptor_dim=32, seed=seed))


@lru_cache(maxsize=None)
def _report(k, seed, skip_clustering=False, outlier_ratio=0.4):
    cset = _scene(k, seed, outlier_ratio).correspondences
    result = run_pipeline(cset, RunConfig(skip_clustering=skip_clustering))
    return result, evaluate(result, cset)


def test_empty_set_gives_empty_result():
    empty = CorrespondenceSet((), (100, 100), (100, 100))
    result = run_pipeline(empty)
    assert result.indices == () and result.labels == () and result.homographies == ()
    assert run_gtm_baseline(empty).labels == ()


def test_single_consistency_found():
    result, report = _report(1, 0, outlier_ratio=0.2)
    assert result.num_clusters == 1
    assert report.k_true == 1


def test_single_consistency_precision_and_recall():
    precision = [_report(1, seed, outlier_ratio=0.2)[1].precision for seed in SEEDS]
    recall = [_report(1, seed, outlier_ratio=0.2)[1].recall for seed in SEEDS]
    assert min(precision) >= 0.95
    assert min(recall) >= 0.95


@pytest.mark.parametrize("k", [2, 3, 4])
def test_recovers_every_consistency(k):
    reports = [_report(k, seed)[1] for seed in SEEDS]
    assert sum(r.k_pred == k for r in reports) >= 9
    assert np.mean([r.w_f_measure for r in reports]) >= 0.85


def test_recovery_covers_planted_inliers():
    result, report = _report(3, 0)
    assert report.recall >= 0.95
    assert result.diagnostics["clusters"] == result.num_clusters
    assert result.diagnostics["recovered"] == int(result.inlier_mask().sum())


def test_iterative_clustering_beats_survivors_alone():
    with_clustering = np.mean([_report(3, seed)[1].w_recall for seed in SEEDS])
    without = np.mean([_report(3, seed, skip_clustering=True)[1].w_recall for seed in SEEDS])
    assert with_clustering - without >= 0.2


def test_skip_clustering_labels_game_survivors():
    cset = _scene(3, 1).correspondences
    cfg = RunConfig(skip_clustering=True)
    result = run_pipeline(cset, cfg)
    prepared, params = prepare_inputs(cset, cfg.payoff)
    survivors = set(play_all_games(match_blocks(assign_blocks(prepared, cfg.grid), cfg.grid),
                                   prepared, params, cfg.game))
    expected = tuple(UNASSIGNED if i in survivors else OUTLIER for i in cset.indices.tolist())
    assert result.labels == expected
    assert result.homographies == ()
    assert result.diagnostics["passes"] == 1


def test_same_input_same_result():
    cset = _scene(2, 3).correspondences
    assert run_pipeline(cset) == run_pipeline(cset)


def test_thread_count_does_not_change_result():
    cset = _scene(3, 4).correspondences
    single = run_pipeline(cset, RunConfig(threads=1))
    pooled = run_pipeline(cset, RunConfig(threads=4))
    assert single == pooled
    assert single.diagnostics == pooled.diagnostics


def test_threads_from_environment(monkeypatch):
    cset = _scene(2, 5).correspondences
    monkeypatch.setenv("ICGTM_THREADS", "0")
    with pytest.raises(ConfigError):
        run_pipeline(cset)
    monkeypatch.setenv("ICGTM_THREADS", "3")
    assert run_pipeline(cset) == _report(2, 5)[0]


def test_timer_records_stages():
    timer = StageTimer()
    run_pipeline(_scene(2, 6).correspondences, timer=timer)
    names = [name for name, _ in timer.items()]
    assert {"prepare", "blocks", "games", "clustering", "recovery"} <= set(names)
    assert timer.total >= 0.0


def test_single_pass_by_default():
    result, _ = _report(4, 2)
    assert result.diagnostics["passes"] == 1
    result.validate()


def test_reiteration_runs_on_truth_bearing_scenes():
    cfg = RunConfig(cluster=ClusterConfig(reiterate=True, max_passes=3))
    for seed in SEEDS:
        cset = _scene(2, seed).correspondences
        result = run_pipeline(cset, cfg)
        result.validate()
        if result.num_clusters:
            assert result.diagnostics["passes"] >= 2
        assert evaluate(result, cset).k_true == 2


def test_partially_explained_scene_completes():
    # seed 1 leaves only the second consistency unexplained after the first recovery
    cset = _scene(2, 1).correspondences
    for reiterate in (False, True):
        result = run_pipeline(cset, RunConfig(cluster=ClusterConfig(reiterate=reiterate)))
        assert result.indices == tuple(cset.indices.tolist())


def test_diagnostics_count_each_recovered_cluster():
    result, _ = _report(3, 0)
    sizes = [result.diagnostics[f"cluster_{k}"] for k in range(result.num_clusters)]
    assert sizes == result.cluster_sizes()
    assert sum(sizes) == result.diagnostics["recovered"]
    assert f"cluster_{result.num_clusters}" not in result.diagnostics


def test_payoff_modes_all_run():
    cset = _scene(2, 7).correspondences
    for mode in PayoffMode:
        result = run_pipeline(cset, RunConfig(payoff=PayoffParams(mode=mode)))
        result.validate()
        assert result.indices == tuple(cset.indices.tolist())


def test_gtm_baseline_keeps_one_population():
    cset = _scene(2, 8).correspondences
    result = run_gtm_baseline(cset)
    assert result.homographies == ()
    assert set(result.labels) <= {UNASSIGNED, OUTLIER}
    assert result.diagnostics["survivors"] == result.labels.count(UNASSIGNED)


def test_ransac_baseline_finds_one_consistency():
    cset = _scene(1, 9, 0.2).correspondences
    result = run_ransac_baseline(cset)
    report = evaluate(result, cset)
    assert result.num_clusters == 1
    assert report.recall >= 0.85


def test_ransac_baseline_on_multiple_consistencies_misses_some():
    cset = _scene(3, 0).correspondences
    report = evaluate(run_ransac_baseline(cset), cset)
    assert report.k_pred == 1
    assert report.recall < _report(3, 0)[1].recall


def test_run_method_dispatches_on_method():
    cset = _scene(2, 1).correspondences
    timer = StageTimer()
    assert run_method(cset, RunConfig(method="ransac"), timer) == run_ransac_baseline(cset)
    assert [name for name, _ in timer.items()] == ["ransac"]
    with pytest.raises(ConfigError):
        replace(RunConfig(), method="other")
