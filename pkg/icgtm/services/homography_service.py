"""Homography estimation: normalised DLT inside a seeded, batched RANSAC."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from icgtm.config import ClusterConfig
from icgtm.errors import HomographyError, InvariantError
from icgtm.models import Correspondence, Homography

logger = logging.getLogger(__name__)

SAMPLE_SIZE = 4
# Triangle area, relative to the squared sample extent, below which three points count as collinear.
COLLINEAR_EPS = 1e-9
_TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


@dataclass(frozen=True)
class HomographyFit:
    homography: Homography
    inliers: np.ndarray
    hypotheses: int


def _conditioning(points: np.ndarray):
    """Translate the centroid to the origin and scale the mean distance to sqrt(2).

    Works on stacks of point sets shaped (..., n, 2); returns the normalised
    points, the conditioning matrices and their inverses.
    """
    centroid = points.mean(axis=-2)
    centred = points - centroid[..., None, :]
    scale = np.sqrt(2.0) / np.linalg.norm(centred, axis=-1).mean(axis=-1)

    t = np.zeros(points.shape[:-2] + (3, 3))
    t[..., 0, 0] = t[..., 1, 1] = scale
    t[..., 0, 2] = -scale * centroid[..., 0]
    t[..., 1, 2] = -scale * centroid[..., 1]
    t[..., 2, 2] = 1.0

    t_inv = np.zeros_like(t)
    t_inv[..., 0, 0] = t_inv[..., 1, 1] = 1.0 / scale
    t_inv[..., 0, 2] = centroid[..., 0]
    t_inv[..., 1, 2] = centroid[..., 1]
    t_inv[..., 2, 2] = 1.0
    return centred * scale[..., None, None], t, t_inv


def _design_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    x, y = src[..., 0], src[..., 1]
    xp, yp = dst[..., 0], dst[..., 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    r1 = np.stack([x, y, one, zero, zero, zero, -xp * x, -xp * y, -xp], axis=-1)
    r2 = np.stack([zero, zero, zero, x, y, one, -yp * x, -yp * y, -yp], axis=-1)
    rows = np.stack([r1, r2], axis=-2)
    return rows.reshape(src.shape[:-2] + (2 * src.shape[-2], 9))


def dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalised direct linear transform; accepts stacks shaped (..., n, 2)."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.shape[-2] < SAMPLE_SIZE:
        raise HomographyError("DLT needs at least 4 matching point pairs")
    ns, ts, _ = _conditioning(src)
    nd, _, td_inv = _conditioning(dst)
    _, _, vh = np.linalg.svd(_design_matrix(ns, nd))
    hn = vh[..., -1, :].reshape(src.shape[:-2] + (3, 3))
    return td_inv @ hn @ ts


def degenerate_samples(points: np.ndarray) -> np.ndarray:
    """Mask of 4-point samples (k, 4, 2) holding three collinear points."""
    centred = points - points.mean(axis=1, keepdims=True)
    extent = np.linalg.norm(centred, axis=-1).mean(axis=-1)
    bad = extent == 0.0
    for a, b, c in _TRIPLES:
        u = points[:, b] - points[:, a]
        v = points[:, c] - points[:, a]
        area = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        bad |= area <= COLLINEAR_EPS * extent ** 2
    return bad


def _adjugate(hs: np.ndarray) -> np.ndarray:
    """Adjugate of stacked 3x3 matrices; a scaled inverse that exists even when singular."""
    r0, r1, r2 = hs[..., 0, :], hs[..., 1, :], hs[..., 2, :]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-1)


def _project(hs: np.ndarray, points: np.ndarray) -> np.ndarray:
    homog = np.einsum("kij,nj->kni", hs, np.hstack([points, np.ones((len(points), 1))]))
    w = homog[..., 2:3]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = homog[..., :2] / w
    return np.where(w != 0.0, out, np.inf)


def transfer_errors(hs: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Symmetric transfer distance max(forward, backward) for stacked models, shape (k, n)."""
    with np.errstate(invalid="ignore", over="ignore"):
        forward = np.linalg.norm(_project(hs, src) - dst, axis=-1)
        backward = np.linalg.norm(_project(_adjugate(hs), dst) - src, axis=-1)
        err = np.maximum(forward, backward)
    return np.where(np.isfinite(err), err, np.inf)


def symmetric_transfer(h: Homography, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    return transfer_errors(h.matrix[None], src, dst)[0]


def fit_homography(src: np.ndarray, dst: np.ndarray, cfg: ClusterConfig,
                   rng: Optional[np.random.Generator] = None) -> HomographyFit:
    """RANSAC over minimal samples, then a DLT refit on the best consensus set."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    n = len(src)
    if n < SAMPLE_SIZE:
        raise HomographyError(f"need at least {SAMPLE_SIZE} correspondences, got {n}")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    samples = rng.random((cfg.ransac_iters, n)).argsort(axis=1)[:, :SAMPLE_SIZE]
    ok = ~(degenerate_samples(src[samples]) | degenerate_samples(dst[samples]))
    if not ok.any():
        raise HomographyError("every minimal sample is degenerate")
    samples = samples[ok]

    hypotheses = dlt(src[samples], dst[samples])
    errors = transfer_errors(hypotheses, src, dst)
    counts = np.count_nonzero(errors <= cfg.ransac_tol, axis=1)
    best = int(np.argmax(counts))
    consensus = errors[best] <= cfg.ransac_tol
    if counts[best] < SAMPLE_SIZE:
        raise HomographyError(f"best consensus holds only {counts[best]} correspondences")

    refit = dlt(src[consensus], dst[consensus])
    try:
        homography = Homography.from_matrix(refit)
    except InvariantError as e:
        raise HomographyError(f"refit produced an invalid homography ({e})") from e

    logger.debug("RANSAC: %d hypotheses, consensus %d of %d", len(samples), int(counts[best]), n)
    return HomographyFit(homography, consensus, len(samples))


def estimate_homography(members: Sequence[Correspondence], cfg: ClusterConfig) -> Homography:
    src = np.array([(c.left.x, c.left.y) for c in members], dtype=float).reshape(-1, 2)
    dst = np.array([(c.right.x, c.right.y) for c in members], dtype=float).reshape(-1, 2)
    return fit_homography(src, dst, cfg).homography


def reprojection_errors(h: Homography, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """One-directional left-to-right error; infinite where the projection is undefined."""
    with np.errstate(invalid="ignore", over="ignore"):
        err = np.linalg.norm(h.project(src) - np.asarray(dst, dtype=float).reshape(-1, 2), axis=1)
    return np.where(np.isfinite(err), err, np.inf)


def reprojection_error(h: Homography, c: Correspondence) -> float:
    return float(reprojection_errors(h, [(c.left.x, c.left.y)], [(c.right.x, c.right.y)])[0])
