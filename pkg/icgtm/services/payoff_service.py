"""Pairwise compatibility between correspondences and payoff-matrix assembly.

Geometric compatibility compares where the local affine frames of two
correspondences send each other's keypoints. The default projection acts on
the offset from the frame's own keypoint, ``T_j(k) = A_j (k - k_j) + k_j'``,
so every correspondence maps its own keypoint exactly onto its match. The
literal homogeneous form ``T_j(k) = A_j k + k_j`` is kept behind
``PayoffParams.literal_projection``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from icgtm.config import PayoffMode, PayoffParams
from icgtm.errors import ConfigError, InvariantError, ProjectionError
from icgtm.models import Correspondence, CorrespondenceSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PayoffMatrix:
    """Dense symmetric payoff matrix over the correspondences in ``indices``."""

    values: np.ndarray
    indices: Tuple[int, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if values.shape != (len(self.indices), len(self.indices)):
            raise InvariantError("payoff matrix shape does not match its indices")

    def __len__(self) -> int:
        return len(self.indices)


def rho(v: np.ndarray) -> np.ndarray:
    """Dehomogenise a 3-vector."""
    v = np.asarray(v, dtype=float)
    if v[2] == 0.0:
        raise ProjectionError("homogeneous scale is zero")
    return v[:2] / v[2]


def affine_project(source: Correspondence, point, literal: bool = False) -> np.ndarray:
    """Project ``point`` through the local affine frame of ``source``."""
    a = source.left.affine_matrix
    k = np.asarray(point, dtype=float)
    if literal:
        t = np.block([[a, source.left.position[:, None]], [np.zeros((1, 2)), np.ones((1, 1))]])
        return rho(t @ np.append(k, 1.0))
    t = np.block([[a, source.right.position[:, None]], [np.zeros((1, 2)), np.ones((1, 1))]])
    return rho(t @ np.append(k - source.left.position, 1.0))


def geometric_payoff(ci: Correspondence, cj: Correspondence, params: PayoffParams) -> float:
    literal = params.literal_projection
    try:
        ki, kj = ci.left.position, cj.left.position
        d1 = np.linalg.norm(affine_project(ci, ki, literal) - affine_project(cj, ki, literal))
        d2 = np.linalg.norm(affine_project(ci, kj, literal) - affine_project(cj, kj, literal))
    except ProjectionError:
        return 0.0
    value = math.exp(-(d1 + d2) / params.sigma)
    return value if math.isfinite(value) else 0.0


def ratio_score(i: int, left_descs: np.ndarray, right_descs: np.ndarray) -> float:
    """Nearest over second-nearest right-descriptor distance for left descriptor ``i``."""
    right = np.asarray(right_descs, dtype=float)
    if len(right) < 2:
        raise InvariantError("ratio test needs at least two right descriptors")
    dists = np.linalg.norm(right - np.asarray(left_descs, dtype=float)[i], axis=1)
    d1, d2 = np.partition(dists, 1)[:2]
    if d2 == 0.0:
        return 1.0
    return float(min(d1 / d2, 1.0))


def ratio_scores(left_descs: np.ndarray, right_descs: np.ndarray) -> np.ndarray:
    return np.array([ratio_score(i, left_descs, right_descs) for i in range(len(left_descs))])


def descriptive_payoff(ri: float, rj: float, params: PayoffParams) -> float:
    return math.exp(-max(ri, rj) / params.alpha)


def _require_beta(params: PayoffParams) -> float:
    if params.beta is None:
        raise ConfigError("beta is unresolved; call resolve_beta first")
    return params.beta


def des_payoff(ci: Correspondence, cj: Correspondence, params: PayoffParams) -> float:
    if ci.left_desc.dim != cj.left_desc.dim:
        raise InvariantError("descriptor dimensions differ")
    di = np.linalg.norm(ci.left_desc.as_array() - ci.right_desc.as_array())
    dj = np.linalg.norm(cj.left_desc.as_array() - cj.right_desc.as_array())
    return math.exp(-max(di, dj) / _require_beta(params))


def matched_distances(cset: CorrespondenceSet) -> np.ndarray:
    return np.linalg.norm(cset.left_descs - cset.right_descs, axis=1)


def resolve_beta(cset: CorrespondenceSet, params: PayoffParams) -> PayoffParams:
    """Fill an unset ``beta`` with half the median matched-descriptor distance."""
    if params.beta is not None:
        return params
    beta = 1.0
    if len(cset):
        median = float(np.median(matched_distances(cset)))
        if median > 0.0:
            beta = 0.5 * median
    return replace(params, beta=beta)


def _geometric_matrix(points, matches, affines, params: PayoffParams) -> np.ndarray:
    if params.literal_projection:
        # projected[a, p] = A_a k_p + k_a
        projected = np.einsum("aij,pj->api", affines, points) + points[:, None, :]
        own = projected[np.arange(len(points)), np.arange(len(points))]
        dist = np.linalg.norm(own[:, None, :] - projected.transpose(1, 0, 2), axis=2)
    else:
        # projected[i, j] = T_j(k_i)
        offsets = points[:, None, :] - points[None, :, :]
        projected = np.einsum("jab,ijb->ija", affines, offsets) + matches[None, :, :]
        dist = np.linalg.norm(matches[:, None, :] - projected, axis=2)
    with np.errstate(over="ignore", invalid="ignore"):
        geo = np.exp(-(dist + dist.T) / params.sigma)
    return np.where(np.isfinite(geo), geo, 0.0)


def payoff_values(points: np.ndarray, matches: np.ndarray, affines: np.ndarray,
                  ratios: Optional[np.ndarray], distances: Optional[np.ndarray],
                  params: PayoffParams) -> np.ndarray:
    """Off-diagonal payoffs for correspondences given as stacked arrays."""
    n = len(points)
    values = np.zeros((n, n))
    if params.mode.uses_geometry:
        values += _geometric_matrix(points, matches, affines, params)
    if params.mode.uses_ratio:
        if ratios is None or np.isnan(ratios).any():
            raise InvariantError("ratio payoff requires populated ratios")
        values += np.exp(-np.maximum.outer(ratios, ratios) / params.alpha)
    if params.mode is PayoffMode.DES:
        values += np.exp(-np.maximum.outer(distances, distances) / _require_beta(params))
    np.fill_diagonal(values, 0.0)
    return values


def build_payoff_matrix(members: Sequence[Correspondence], params: PayoffParams) -> PayoffMatrix:
    if len(members) == 0:
        raise InvariantError("payoff matrix needs at least one member")
    points = np.array([(c.left.x, c.left.y) for c in members], dtype=float)
    matches = np.array([(c.right.x, c.right.y) for c in members], dtype=float)
    affines = np.array([c.left.affine for c in members], dtype=float).reshape(-1, 2, 2)
    ratios = np.array([np.nan if c.ratio is None else c.ratio for c in members], dtype=float)
    distances = None
    if params.mode is PayoffMode.DES:
        distances = np.array([np.linalg.norm(c.left_desc.as_array() - c.right_desc.as_array()) for c in members])
    values = payoff_values(points, matches, affines, ratios, distances, params)
    return PayoffMatrix(values, tuple(c.index for c in members))


def payoff_matrix_for(cset: CorrespondenceSet, indices: Sequence[int], params: PayoffParams) -> PayoffMatrix:
    """Payoff matrix over ``indices`` of ``cset`` using the set's cached arrays."""
    if len(indices) == 0:
        raise InvariantError("payoff matrix needs at least one member")
    pos = np.array([cset.positions[int(i)] for i in indices], dtype=int)
    distances = None
    if params.mode is PayoffMode.DES:
        distances = matched_distances(cset)[pos]
    values = payoff_values(cset.left_points[pos], cset.right_points[pos], cset.left_affines[pos],
                           cset.ratios[pos], distances, params)
    return PayoffMatrix(values, tuple(int(i) for i in indices))
