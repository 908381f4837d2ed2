"""Domain types for correspondence sets and match results.

Every type is a frozen dataclass holding plain tuples, so instances are
hashable, comparable and safe to share between worker threads. NumPy views
of a set are built lazily and cached on the instance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from icgtm.errors import InvariantError

# Label values shared by ground truth and match results.
OUTLIER = -1
UNKNOWN = -2
UNASSIGNED = -3


def _finite(values: Iterable[float]) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class Keypoint:
    """Keypoint position in pixels plus its 2x2 local affine frame (row-major)."""

    x: float
    y: float
    affine: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)

    def __post_init__(self):
        if not _finite((self.x, self.y)):
            raise InvariantError("position must be finite")
        if len(self.affine) != 4 or not _finite(self.affine):
            raise InvariantError("affine frame must hold 4 finite entries")
        a11, a12, a21, a22 = self.affine
        if a11 * a22 - a12 * a21 == 0.0:
            raise InvariantError("affine frame is singular")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @property
    def affine_matrix(self) -> np.ndarray:
        return np.array(self.affine, dtype=float).reshape(2, 2)


@dataclass(frozen=True)
class Descriptor:
    values: Tuple[float, ...]

    def __post_init__(self):
        if not _finite(self.values):
            raise InvariantError("descriptor entries must be finite")

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class Correspondence:
    """One putative match. ``ratio`` is None until the ratio test has run."""

    index: int
    left: Keypoint
    right: Keypoint
    left_desc: Descriptor
    right_desc: Descriptor
    ratio: Optional[float] = None

    def __post_init__(self):
        if self.left_desc.dim != self.right_desc.dim:
            raise InvariantError("left and right descriptor dimensions differ")
        if self.ratio is not None and not (0.0 <= self.ratio <= 1.0):
            raise InvariantError(f"ratio {self.ratio} outside [0, 1]")


@dataclass(frozen=True)
class CorrespondenceSet:
    """Ordered putative matches between two images.

    ``ground_truth`` holds ``(index, label)`` pairs in item order, where the
    label is ``OUTLIER``, ``UNKNOWN`` or a consistency id counted from 0.
    """

    items: Tuple[Correspondence, ...]
    image_size_left: Tuple[int, int]
    image_size_right: Tuple[int, int]
    ground_truth: Optional[Tuple[Tuple[int, int], ...]] = None
    descriptor_dim: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", tuple((int(i), int(l)) for i, l in self.ground_truth))

        for size in (self.image_size_left, self.image_size_right):
            if len(size) != 2 or size[0] <= 0 or size[1] <= 0:
                raise InvariantError(f"invalid image size {size}")

        dim = self.items[0].left_desc.dim if self.items else (self.descriptor_dim or 0)
        if self.descriptor_dim is not None and self.descriptor_dim != dim:
            raise InvariantError(f"descriptor dimension {dim} does not match declared {self.descriptor_dim}")
        object.__setattr__(self, "descriptor_dim", dim)

        seen = set()
        for c in self.items:
            if c.index in seen:
                raise InvariantError(f"duplicate correspondence index {c.index}")
            seen.add(c.index)
            if c.left_desc.dim != dim:
                raise InvariantError(f"descriptor dimension mismatch at index {c.index}")
            if not self._inside(c.left, self.image_size_left) or not self._inside(c.right, self.image_size_right):
                raise InvariantError(f"position out of bounds at index {c.index}")

        if self.ground_truth is not None:
            self._check_truth()

    @staticmethod
    def _inside(kp: Keypoint, size: Tuple[int, int]) -> bool:
        return 0.0 <= kp.x <= size[0] and 0.0 <= kp.y <= size[1]

    def _check_truth(self):
        if len(self.ground_truth) != len(self.items):
            raise InvariantError("ground truth must label every correspondence")
        for (idx, _), c in zip(self.ground_truth, self.items):
            if idx != c.index:
                raise InvariantError(f"ground truth out of order at index {c.index}")
        ids = sorted({label for _, label in self.ground_truth if label >= 0})
        if ids != list(range(len(ids))):
            raise InvariantError("consistency ids must be contiguous from 0")
        if any(label < 0 and label not in (OUTLIER, UNKNOWN) for _, label in self.ground_truth):
            raise InvariantError("unknown ground-truth label")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def has_ratios(self) -> bool:
        return all(c.ratio is not None for c in self.items)

    @property
    def has_truth(self) -> bool:
        return self.ground_truth is not None and any(l != UNKNOWN for _, l in self.ground_truth)

    @cached_property
    def indices(self) -> np.ndarray:
        return np.array([c.index for c in self.items], dtype=int)

    @cached_property
    def positions(self) -> Dict[int, int]:
        return {c.index: pos for pos, c in enumerate(self.items)}

    @cached_property
    def left_points(self) -> np.ndarray:
        return np.array([(c.left.x, c.left.y) for c in self.items], dtype=float).reshape(-1, 2)

    @cached_property
    def right_points(self) -> np.ndarray:
        return np.array([(c.right.x, c.right.y) for c in self.items], dtype=float).reshape(-1, 2)

    @cached_property
    def left_affines(self) -> np.ndarray:
        return np.array([c.left.affine for c in self.items], dtype=float).reshape(-1, 2, 2)

    @cached_property
    def left_descs(self) -> np.ndarray:
        return np.array([c.left_desc.values for c in self.items], dtype=float).reshape(len(self.items), -1)

    @cached_property
    def right_descs(self) -> np.ndarray:
        return np.array([c.right_desc.values for c in self.items], dtype=float).reshape(len(self.items), -1)

    @cached_property
    def ratios(self) -> np.ndarray:
        return np.array([np.nan if c.ratio is None else c.ratio for c in self.items], dtype=float)

    def truth_labels(self) -> np.ndarray:
        """Ground-truth labels aligned with ``items``."""
        if self.ground_truth is None:
            return np.full(len(self.items), UNKNOWN, dtype=int)
        return np.array([label for _, label in self.ground_truth], dtype=int)

    def subset(self, indices: Iterable[int], keep_truth: bool = True) -> "CorrespondenceSet":
        """New set holding only the given correspondence indices, in set order.

        With ``keep_truth=False`` the result carries no ground truth, so any
        selection is valid even when it leaves gaps in the consistency ids.
        """
        wanted = set(int(i) for i in indices)
        keep = [p for p, c in enumerate(self.items) if c.index in wanted]
        truth = None
        if keep_truth and self.ground_truth is not None:
            truth = tuple(self.ground_truth[p] for p in keep)
        return CorrespondenceSet(
            items=tuple(self.items[p] for p in keep),
            image_size_left=self.image_size_left,
            image_size_right=self.image_size_right,
            ground_truth=truth,
            descriptor_dim=self.descriptor_dim,
        )

    def with_ratios(self, ratios: Sequence[float]) -> "CorrespondenceSet":
        if len(ratios) != len(self.items):
            raise InvariantError("one ratio per correspondence is required")
        items = tuple(
            Correspondence(c.index, c.left, c.right, c.left_desc, c.right_desc, float(r))
            for c, r in zip(self.items, ratios)
        )
        return CorrespondenceSet(items, self.image_size_left, self.image_size_right,
                                 self.ground_truth, self.descriptor_dim)


@dataclass(frozen=True)
class Homography:
    """3x3 projective map stored row-major, scaled so its largest-magnitude entry is 1."""

    h: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.h)
        if len(values) != 9 or not _finite(values):
            raise InvariantError("homography needs 9 finite entries")
        pivot = max(values, key=abs)
        if pivot == 0.0:
            raise InvariantError("homography is the zero matrix")
        object.__setattr__(self, "h", tuple(v / pivot for v in values))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Homography":
        return cls(tuple(np.asarray(m, dtype=float).reshape(9).tolist()))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.h, dtype=float).reshape(3, 3)

    def project(self, points: np.ndarray) -> np.ndarray:
        """Map (n, 2) points; points whose homogeneous scale vanishes map to inf."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        homog = np.hstack([pts, np.ones((len(pts), 1))]) @ self.matrix.T
        out = np.full((len(pts), 2), np.inf)
        ok = homog[:, 2] != 0.0
        out[ok] = homog[ok, :2] / homog[ok, 2:3]
        return out


@dataclass(frozen=True)
class MatchResult:
    """Per-correspondence labels plus the homography of every cluster id."""

    indices: Tuple[int, ...]
    labels: Tuple[int, ...]
    homographies: Tuple[Homography, ...] = ()
    diagnostics: Dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        object.__setattr__(self, "homographies", tuple(self.homographies))

    def validate(self):
        if len(self.indices) != len(self.labels):
            raise InvariantError("one label per correspondence is required")
        if len(set(self.indices)) != len(self.indices):
            raise InvariantError("duplicate correspondence index in result")
        k = len(self.homographies)
        for idx, label in zip(self.indices, self.labels):
            if label >= k:
                raise InvariantError(f"cluster id {label} has no homography at index {idx}")
            if label < 0 and label not in (OUTLIER, UNASSIGNED):
                raise InvariantError(f"invalid label {label} at index {idx}")

    @property
    def num_clusters(self) -> int:
        return len(self.homographies)

    def label_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=int)

    def inlier_mask(self) -> np.ndarray:
        return self.label_array() != OUTLIER

    def cluster_sizes(self) -> List[int]:
        labels = self.label_array()
        return [int(np.sum(labels == k)) for k in range(self.num_clusters)]

    def label_map(self) -> Dict[int, int]:
        return dict(zip(self.indices, self.labels))
