"""Grid block assignment and count-based block pairing."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from icgtm.config import GridConfig
from icgtm.models import CorrespondenceSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockAssignment:
    """Row-major block ids of every correspondence, aligned with the set's items."""

    indices: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.left.tolist(), self.right.tolist()))


@dataclass(frozen=True)
class BlockPair:
    left_block: int
    right_block: int
    member_indices: Tuple[int, ...]
    score: int


def cell_ids(points: np.ndarray, size: Tuple[int, int], cfg: GridConfig) -> np.ndarray:
    """Block id per point; the last row and column absorb remainder pixels."""
    width, height = size
    cell_w = max(width // cfg.cols, 1)
    cell_h = max(height // cfg.rows, 1)
    col = np.minimum((points[:, 0] // cell_w).astype(int), cfg.cols - 1)
    row = np.minimum((points[:, 1] // cell_h).astype(int), cfg.rows - 1)
    return row * cfg.cols + col


def assign_blocks(cset: CorrespondenceSet, cfg: GridConfig) -> BlockAssignment:
    return BlockAssignment(
        indices=cset.indices.copy(),
        left=cell_ids(cset.left_points, cset.image_size_left, cfg),
        right=cell_ids(cset.right_points, cset.image_size_right, cfg),
    )


def _best_left_for_right(assignments: BlockAssignment, cfg: GridConfig) -> np.ndarray:
    m = cfg.num_blocks
    counts = np.zeros((m, m), dtype=int)
    np.add.at(counts, (assignments.left, assignments.right), 1)
    return np.argmax(counts, axis=0)


def match_blocks(assignments: BlockAssignment, cfg: GridConfig) -> List[BlockPair]:
    """Pair every occupied left block with its most populated right block.

    Ties go to the lowest right-block id and pairs scoring below
    ``cfg.min_count`` are discarded.
    """
    if len(assignments) == 0:
        return []

    best_left = _best_left_for_right(assignments, cfg) if cfg.mutual_best else None
    pairs = []
    for a in np.unique(assignments.left):
        in_a = assignments.left == a
        counts = np.bincount(assignments.right[in_a], minlength=cfg.num_blocks)
        b = int(np.argmax(counts))
        score = int(counts[b])
        if score < cfg.min_count:
            continue
        if best_left is not None and best_left[b] != a:
            continue
        members = assignments.indices[in_a & (assignments.right == b)]
        pairs.append(BlockPair(int(a), b, tuple(int(i) for i in members), score))

    logger.debug("Block matching kept %d pairs out of %d occupied left blocks",
                 len(pairs), len(np.unique(assignments.left)))
    return pairs
