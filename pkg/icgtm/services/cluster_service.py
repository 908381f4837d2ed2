"""Anchor clustering over the global candidate payoff matrix and inlier recovery.

Each round picks the most compatible active pair as an anchor, gathers every
active candidate compatible with the anchor above the current threshold, fits
a homography to the group and removes the group from the matrix. Recovery
then relabels every correspondence of the original set against the accepted
homographies.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import AbstractSet, List, Optional, Sequence, Tuple

import numpy as np

from icgtm.config import ClusterConfig, PayoffParams
from icgtm.errors import HomographyError, InvariantError
from icgtm.models import OUTLIER, CorrespondenceSet, Homography, MatchResult
from icgtm.services.homography_service import fit_homography, reprojection_errors
from icgtm.services.payoff_service import PayoffMatrix, payoff_matrix_for

logger = logging.getLogger(__name__)

# Share of a new cluster already explained by an accepted model that makes it a repeat.
REDUNDANT_SHARE = 0.5


@dataclass(frozen=True)
class ConsistencyCluster:
    member_indices: Tuple[int, ...]
    homography: Homography
    inlier_count: int


@dataclass(frozen=True)
class Extraction:
    anchor: Tuple[int, int]
    member_indices: Tuple[int, ...]
    threshold: float


def recompute_payoff_matrix(cset: CorrespondenceSet, candidates: Sequence[int],
                            params: PayoffParams) -> PayoffMatrix:
    if len(candidates) == 0:
        raise InvariantError("cannot build a payoff matrix over zero candidates")
    return payoff_matrix_for(cset, candidates, params)


def _active_mask(m: PayoffMatrix, removed: AbstractSet[int]) -> np.ndarray:
    alive = np.array([idx not in removed for idx in m.indices], dtype=bool)
    mask = np.outer(alive, alive)
    np.fill_diagonal(mask, False)
    return mask


def cluster_threshold(m: PayoffMatrix, removed: AbstractSet[int] = frozenset()) -> Optional[float]:
    """Midpoint of the largest and smallest active entry; None when nothing is active."""
    active = m.values[_active_mask(m, removed)]
    if active.size == 0:
        return None
    return (float(active.max()) + float(active.min())) / 2.0


def extract_cluster(m: PayoffMatrix, removed: AbstractSet[int], cfg: ClusterConfig) -> Optional[Extraction]:
    """Next anchor cluster, or None once the matrix is exhausted."""
    mask = _active_mask(m, removed)
    if not mask.any():
        return None
    tau = cluster_threshold(m, removed)

    upper = np.where(np.triu(mask, k=1), m.values, -np.inf)
    flat = int(np.argmax(upper))
    i, j = divmod(flat, len(m))
    if upper[i, j] <= 0.0:
        return None

    alive = mask[i] | mask[j]
    above_i = m.values[i] > tau
    above_j = m.values[j] > tau
    joined = (above_i & above_j) if cfg.membership == "both" else (above_i | above_j)
    positions = np.flatnonzero(alive & joined).tolist()
    positions = sorted(set(positions) | {i, j})

    if len(positions) < cfg.min_cluster_size:
        logger.debug("Anchor (%d, %d) gathered %d members; stopping", m.indices[i], m.indices[j], len(positions))
        return None
    return Extraction(
        anchor=(m.indices[i], m.indices[j]),
        member_indices=tuple(m.indices[p] for p in positions),
        threshold=tau,
    )


def _explained_share(cset: CorrespondenceSet, members: Sequence[int],
                     accepted: Sequence[Homography], t: float) -> float:
    if not accepted:
        return 0.0
    pos = [cset.positions[idx] for idx in members]
    src, dst = cset.left_points[pos], cset.right_points[pos]
    errors = np.min([reprojection_errors(h, src, dst) for h in accepted], axis=0)
    return float(np.mean(errors < t))


def extract_clusters(cset: CorrespondenceSet, candidates: Sequence[int], params: PayoffParams,
                     cfg: ClusterConfig, accepted: Sequence[Homography] = ()) -> List[ConsistencyCluster]:
    """Run extraction rounds over ``candidates`` until the matrix is exhausted.

    Members of every extracted group leave the matrix, whether or not a new
    cluster comes out of them.
    """
    if len(candidates) < cfg.min_cluster_size:
        return []

    m = recompute_payoff_matrix(cset, candidates, params)
    removed = set()
    known = list(accepted)
    clusters: List[ConsistencyCluster] = []

    for round_no in range(cfg.max_outer_rounds):
        extraction = extract_cluster(m, removed, cfg)
        if extraction is None:
            break
        members = extraction.member_indices
        removed.update(members)

        pos = [cset.positions[idx] for idx in members]
        try:
            fit = fit_homography(cset.left_points[pos], cset.right_points[pos], cfg)
        except HomographyError as e:
            logger.warning("Round %d: dropping %d-member group (%s)", round_no, len(members), e)
            continue

        if cfg.drop_redundant and _explained_share(cset, members, known, cfg.reproj_threshold) >= REDUNDANT_SHARE:
            logger.debug("Round %d: group of %d repeats an accepted transformation", round_no, len(members))
            continue

        known.append(fit.homography)
        clusters.append(ConsistencyCluster(members, fit.homography, int(np.count_nonzero(fit.inliers))))
        logger.debug("Round %d: cluster of %d members, tau %.4f", round_no, len(members), extraction.threshold)

    logger.info("Clustering: %d new clusters from %d candidates", len(clusters), len(candidates))
    return clusters


def recover_inliers(cset: CorrespondenceSet, homographies: Sequence[Homography],
                    cfg: ClusterConfig) -> MatchResult:
    """Label each correspondence with its best homography, or as an outlier past ``t``."""
    homographies = tuple(homographies)
    n = len(cset)
    if not homographies or n == 0:
        return MatchResult(tuple(cset.indices.tolist()), (OUTLIER,) * n, ())

    errors = np.vstack([reprojection_errors(h, cset.left_points, cset.right_points) for h in homographies])
    best = np.argmin(errors, axis=0)
    labels = np.where(errors[best, np.arange(n)] < cfg.reproj_threshold, best, OUTLIER)
    return MatchResult(tuple(cset.indices.tolist()), tuple(labels.tolist()), homographies)


def recovered_clusters(result: MatchResult) -> List[ConsistencyCluster]:
    labels = result.label_array()
    clusters = []
    for k, h in enumerate(result.homographies):
        members = tuple(int(i) for i, l in zip(result.indices, labels) if l == k)
        clusters.append(ConsistencyCluster(members, h, len(members)))
    return clusters


def prune_clusters(cset: CorrespondenceSet, result: MatchResult, cfg: ClusterConfig) -> MatchResult:
    """Drop clusters recovering fewer than ``min_support`` correspondences, relabelling after each drop."""
    while result.num_clusters:
        sizes = result.cluster_sizes()
        keep = [h for h, size in zip(result.homographies, sizes) if size >= cfg.min_support]
        if len(keep) == result.num_clusters:
            break
        logger.info("Dropping %d weakly supported clusters", result.num_clusters - len(keep))
        result = recover_inliers(cset, keep, cfg)
    return result
