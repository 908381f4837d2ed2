"""Synthetic multi-consistency scenes with exact ground truth.

Every consistency owns one compact disc in the left image and is carried to
the right image by its own planted homography. Discs sit in a jittered slot
layout, and the right-image slots are a random permutation of the left ones,
so regions never overlap on either side.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from icgtm.config import SynthConfig
from icgtm.errors import SceneError
from icgtm.models import (
    OUTLIER,
    Correspondence,
    CorrespondenceSet,
    Descriptor,
    Homography,
    Keypoint,
    MatchResult,
)

logger = logging.getLogger(__name__)

# Region radius as a share of the smaller slot side, before dividing by the largest scale.
REGION_SHARE = 0.35
MIN_REGION_RADIUS = 8.0
# Extra room around the mapped region for the projective bulge.
RIGHT_MARGIN = 1.05


@dataclass(frozen=True)
class SyntheticScene:
    correspondences: CorrespondenceSet
    planted: Tuple[Homography, ...]

    def planted_result(self) -> MatchResult:
        """Ground truth and planted homographies as a result, for the sidecar file."""
        cset = self.correspondences
        return MatchResult(tuple(cset.indices.tolist()), tuple(cset.truth_labels().tolist()), self.planted)


def jacobian(h, point) -> np.ndarray:
    """Analytic 2x2 Jacobian of the homography ``h`` at ``point``."""
    m = h.matrix if isinstance(h, Homography) else np.asarray(h, dtype=float)
    x, y = float(point[0]), float(point[1])
    u = m[0, 0] * x + m[0, 1] * y + m[0, 2]
    v = m[1, 0] * x + m[1, 1] * y + m[1, 2]
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    return np.array([
        [(m[0, 0] * w - u * m[2, 0]) / w ** 2, (m[0, 1] * w - u * m[2, 1]) / w ** 2],
        [(m[1, 0] * w - v * m[2, 0]) / w ** 2, (m[1, 1] * w - v * m[2, 1]) / w ** 2],
    ])


def _translation(t) -> np.ndarray:
    return np.array([[1.0, 0.0, t[0]], [0.0, 1.0, t[1]], [0.0, 0.0, 1.0]])


def _similarity(theta: float, scale: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[scale * c, -scale * s, 0.0], [scale * s, scale * c, 0.0], [0.0, 0.0, 1.0]])


def _slot_layout(cfg: SynthConfig):
    cols = math.ceil(math.sqrt(cfg.k))
    rows = math.ceil(cfg.k / cols)
    width, height = cfg.image_size
    slot_w, slot_h = width / cols, height / rows
    radius = REGION_SHARE * min(slot_w, slot_h) / cfg.scale_range[1]
    if radius < MIN_REGION_RADIUS:
        raise SceneError(
            f"cannot pack {cfg.k} regions into a {width}x{height} image "
            f"(radius {radius:.1f}px); use a smaller k or a larger image"
        )
    centres = [((c + 0.5) * slot_w, (r + 0.5) * slot_h) for r in range(rows) for c in range(cols)]
    return centres, (slot_w, slot_h), radius


def _jitter(rng: np.random.Generator, centre, slot, reach: float) -> np.ndarray:
    room = np.maximum(np.array(slot) / 2.0 - reach, 0.0)
    return np.asarray(centre) + rng.uniform(-room, room)


def _planted_homography(rng: np.random.Generator, cfg: SynthConfig, left_c, right_c) -> np.ndarray:
    theta = math.radians(rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg))
    scale = rng.uniform(*cfg.scale_range)
    p = rng.uniform(-cfg.projective_max, cfg.projective_max, size=2)
    projective = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [p[0], p[1], 1.0]])
    return _translation(right_c) @ projective @ _similarity(theta, scale) @ _translation(-np.asarray(left_c))


def _random_affine(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    theta = rng.uniform(-math.pi, math.pi)
    return _similarity(theta, rng.uniform(*cfg.scale_range))[:2, :2]


def _keypoint(point, affine: np.ndarray) -> Keypoint:
    return Keypoint(float(point[0]), float(point[1]), tuple(float(v) for v in affine.reshape(4)))


def generate_scene(cfg: SynthConfig) -> SyntheticScene:
    """Deterministic scene for ``cfg.seed`` with ``k`` planted consistencies plus uniform outliers."""
    rng = np.random.default_rng(cfg.seed)
    width, height = cfg.image_size
    bounds = np.array([width, height], dtype=float)
    centres, slot, radius = _slot_layout(cfg)
    right_slots = rng.permutation(len(centres))[:cfg.k]

    records: List[Tuple[Correspondence, int]] = []
    planted = []
    for cid in range(cfg.k):
        left_c = _jitter(rng, centres[cid], slot, radius)
        right_c = _jitter(rng, centres[right_slots[cid]], slot, RIGHT_MARGIN * cfg.scale_range[1] * radius)
        h = _planted_homography(rng, cfg, left_c, right_c)
        planted.append(Homography.from_matrix(h))

        r = radius * np.sqrt(rng.random(cfg.inliers_per))
        phi = rng.uniform(0.0, 2.0 * math.pi, cfg.inliers_per)
        left = left_c + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        mapped = np.hstack([left, np.ones((len(left), 1))]) @ h.T
        right = mapped[:, :2] / mapped[:, 2:3]
        if cfg.noise_sigma > 0:
            right = np.clip(right + rng.normal(0.0, cfg.noise_sigma, right.shape), 0.0, bounds)

        anchor = rng.normal(0.0, 1.0, cfg.descriptor_dim)
        left_desc = anchor + rng.normal(0.0, cfg.descriptor_spread, (cfg.inliers_per, cfg.descriptor_dim))
        right_desc = left_desc + rng.normal(0.0, cfg.descriptor_noise, left_desc.shape)

        for n in range(cfg.inliers_per):
            frame = jacobian(h, left[n])
            item = Correspondence(
                index=-1,
                left=_keypoint(left[n], frame),
                right=_keypoint(right[n], np.linalg.inv(frame)),
                left_desc=Descriptor(tuple(left_desc[n].tolist())),
                right_desc=Descriptor(tuple(right_desc[n].tolist())),
            )
            records.append((item, cid))

    n_out = round(cfg.k * cfg.inliers_per * cfg.outlier_ratio / (1.0 - cfg.outlier_ratio))
    left = rng.uniform(0.0, 1.0, (n_out, 2)) * bounds
    right = rng.uniform(0.0, 1.0, (n_out, 2)) * bounds
    left_desc = rng.normal(0.0, 1.0, (n_out, cfg.descriptor_dim))
    right_desc = rng.normal(0.0, 1.0, (n_out, cfg.descriptor_dim))
    for n in range(n_out):
        frame = _random_affine(rng, cfg)
        item = Correspondence(
            index=-1,
            left=_keypoint(left[n], frame),
            right=_keypoint(right[n], np.linalg.inv(frame)),
            left_desc=Descriptor(tuple(left_desc[n].tolist())),
            right_desc=Descriptor(tuple(right_desc[n].tolist())),
        )
        records.append((item, OUTLIER))

    order = rng.permutation(len(records))
    items, truth = [], []
    for new_index, pos in enumerate(order.tolist()):
        item, label = records[pos]
        items.append(Correspondence(new_index, item.left, item.right, item.left_desc, item.right_desc))
        truth.append((new_index, label))

    cset = CorrespondenceSet(
        items=tuple(items),
        image_size_left=(width, height),
        image_size_right=(width, height),
        ground_truth=tuple(truth),
        descriptor_dim=cfg.descriptor_dim,
    )
    logger.info("Synthesised %d correspondences: %d consistencies of %d, %d outliers",
                len(cset), cfg.k, cfg.inliers_per, n_out)
    return SyntheticScene(cset, tuple(planted))
