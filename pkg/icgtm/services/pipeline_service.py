from abc import ABC, abstractmethod
from dataclasses import replace
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from icgtm.config import PayoffMode, PayoffParams, RunConfig
from icgtm.errors import HomographyError, PipelineError
from icgtm.models import OUTLIER, UNASSIGNED, CorrespondenceSet, MatchResult
from icgtm.services.block_service import BlockPair, assign_blocks, match_blocks
from icgtm.services.cluster_service import extract_clusters, prune_clusters, recover_inliers, recovered_clusters
from icgtm.services.game_service import play_all_games, play_local_game
from icgtm.services.homography_service import fit_homography
from icgtm.services.payoff_service import ratio_scores, resolve_beta
from icgtm.utils.timing import StageTimer
from icgtm.utils.workers import resolve_workers

logger = logging.getLogger(__name__)


def prepare_inputs(cset: CorrespondenceSet, params: PayoffParams) -> Tuple[CorrespondenceSet, PayoffParams]:
    """Populate ratios and resolve ``beta`` as the payoff mode requires."""
    if params.mode.uses_ratio and not cset.has_ratios:
        if len(cset) >= 2:
            ratios = ratio_scores(cset.left_descs, cset.right_descs)
        else:
            ratios = np.ones(len(cset))
        cset = cset.with_ratios(ratios)
    if params.mode is PayoffMode.DES:
        params = resolve_beta(cset, params)
    return cset, params


def _survivor_result(cset: CorrespondenceSet, survivors, diagnostics: Dict[str, int]) -> MatchResult:
    kept = set(survivors)
    labels = tuple(UNASSIGNED if idx in kept else OUTLIER for idx in cset.indices.tolist())
    return MatchResult(tuple(cset.indices.tolist()), labels, (), diagnostics)


# 1. Interface Matcher
class Matcher(ABC):
    """Interface cho correspondence selection methods"""

    @abstractmethod
    def match(self, cset: CorrespondenceSet, cfg: RunConfig, workers: int, timer: StageTimer) -> MatchResult:
        pass


# 2. Implementation: blocks, local games, iterative clustering
class IcgtmMatcher(Matcher):
    def match(self, cset: CorrespondenceSet, cfg: RunConfig, workers: int, timer: StageTimer) -> MatchResult:
        diagnostics = {"input": len(cset), "blocks_kept": 0, "survivors": 0, "passes": 0}
        if len(cset) == 0:
            return MatchResult((), (), (), {**diagnostics, "clusters": 0, "recovered": 0})

        with timer.stage("prepare"):
            cset, params = prepare_inputs(cset, cfg.payoff)

        passes = 1 if cfg.skip_clustering or not cfg.cluster.reiterate else cfg.cluster.max_passes
        homographies = []
        pool = cset
        for p in range(passes):
            with timer.stage("blocks"):
                pairs = match_blocks(assign_blocks(pool, cfg.grid), cfg.grid)
            with timer.stage("games"):
                survivors = play_all_games(pairs, pool, params, cfg.game, workers)
            if p == 0:
                diagnostics["blocks_kept"] = len(pairs)
                diagnostics["survivors"] = len(survivors)
            diagnostics["passes"] = p + 1

            if cfg.skip_clustering:
                return _survivor_result(cset, survivors, diagnostics)

            with timer.stage("clustering"):
                found = extract_clusters(pool, survivors, params, cfg.cluster, homographies)
            if not found:
                break
            homographies.extend(c.homography for c in found)

            with timer.stage("recovery"):
                partial = recover_inliers(cset, homographies, cfg.cluster)
            unexplained = [idx for idx, label in zip(partial.indices, partial.labels) if label == OUTLIER]
            logger.info("Pass %d: %d transformations, %d correspondences unexplained",
                        p + 1, len(homographies), len(unexplained))
            if p + 1 == passes or len(unexplained) < cfg.cluster.min_cluster_size:
                break
            pool = cset.subset(unexplained, keep_truth=False)

        with timer.stage("recovery"):
            result = prune_clusters(cset, recover_inliers(cset, homographies, cfg.cluster), cfg.cluster)
        diagnostics["clusters"] = result.num_clusters
        diagnostics["recovered"] = int(np.count_nonzero(result.inlier_mask()))
        for k, cluster in enumerate(recovered_clusters(result)):
            diagnostics[f"cluster_{k}"] = cluster.inlier_count
        return replace(result, diagnostics=diagnostics)


# 3. Implementation: one game over the whole set, geometric payoff only
class GtmMatcher(Matcher):
    def match(self, cset: CorrespondenceSet, cfg: RunConfig, workers: int, timer: StageTimer) -> MatchResult:
        diagnostics = {"input": len(cset), "survivors": 0}
        if len(cset) == 0:
            return MatchResult((), (), (), diagnostics)
        params = replace(cfg.payoff, mode=PayoffMode.GEO)
        everyone = BlockPair(0, 0, tuple(cset.indices.tolist()), len(cset))
        with timer.stage("games"):
            survivors = play_local_game(everyone, cset, params, cfg.game)
        diagnostics["survivors"] = len(survivors)
        return _survivor_result(cset, survivors, diagnostics)


# 4. Implementation: a single global RANSAC homography
class RansacMatcher(Matcher):
    def match(self, cset: CorrespondenceSet, cfg: RunConfig, workers: int, timer: StageTimer) -> MatchResult:
        indices = tuple(cset.indices.tolist())
        diagnostics = {"input": len(cset), "clusters": 0, "recovered": 0}
        try:
            with timer.stage("ransac"):
                fit = fit_homography(cset.left_points, cset.right_points, cfg.cluster)
        except HomographyError as e:
            logger.warning("Global RANSAC failed: %s", e)
            return MatchResult(indices, (OUTLIER,) * len(indices), (), diagnostics)
        labels = tuple(np.where(fit.inliers, 0, OUTLIER).tolist())
        diagnostics.update(clusters=1, recovered=int(np.count_nonzero(fit.inliers)))
        return MatchResult(indices, labels, (fit.homography,), diagnostics)


# 5. Service
class PipelineService:
    def __init__(self, matchers: Optional[Dict[str, Matcher]] = None):
        self.matchers = matchers or {
            "icgtm": IcgtmMatcher(),
            "gtm": GtmMatcher(),
            "ransac": RansacMatcher(),
        }

    def run(self, cset: CorrespondenceSet, cfg: RunConfig, timer: Optional[StageTimer] = None) -> MatchResult:
        matcher = self.matchers.get(cfg.method)
        if matcher is None:
            raise PipelineError(f"no matcher registered for method {cfg.method!r}")
        timer = timer if timer is not None else StageTimer()
        workers = resolve_workers(cfg.threads)
        logger.info("Running %s on %d correspondences with %d worker(s)", cfg.method, len(cset), workers)
        result = matcher.match(cset, cfg, workers, timer)
        result.validate()
        return result


# Public API
_service = PipelineService()

def run_pipeline(cset: CorrespondenceSet, cfg: Optional[RunConfig] = None,
                 timer: Optional[StageTimer] = None) -> MatchResult:
    cfg = cfg or RunConfig()
    return _service.run(cset, replace(cfg, method="icgtm"), timer)

def run_gtm_baseline(cset: CorrespondenceSet, cfg: Optional[RunConfig] = None) -> MatchResult:
    return _service.run(cset, replace(cfg or RunConfig(), method="gtm"))

def run_ransac_baseline(cset: CorrespondenceSet, cfg: Optional[RunConfig] = None) -> MatchResult:
    return _service.run(cset, replace(cfg or RunConfig(), method="ransac"))

def run_method(cset: CorrespondenceSet, cfg: RunConfig, timer: Optional[StageTimer] = None) -> MatchResult:
    return _service.run(cset, cfg, timer)
