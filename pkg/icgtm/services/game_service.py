"""Local non-cooperative games: replicator dynamics plus Otsu thresholding."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from icgtm.config import GameConfig, PayoffParams
from icgtm.errors import InvariantError
from icgtm.models import CorrespondenceSet
from icgtm.services.block_service import BlockPair
from icgtm.services.payoff_service import PayoffMatrix, payoff_matrix_for

logger = logging.getLogger(__name__)

# Popularity spread below which a game has a single class and eliminates nobody.
FLAT_POPULATION = 1e-12


@dataclass(frozen=True)
class PopularityVector:
    q: np.ndarray
    iteration: int


def replicator_iterates(m: PayoffMatrix, cfg: GameConfig) -> Iterator[np.ndarray]:
    """Yield q(0), q(1), ... of the discrete replicator map until it settles.

    Stops early when the average payoff vanishes, leaving the uniform start
    as the last iterate.
    """
    values = m.values
    n = len(m)
    q = np.full(n, 1.0 / n)
    yield q
    for _ in range(cfg.max_iters):
        fitness = values @ q
        average = float(q @ fitness)
        if average <= 0.0:
            return
        nxt = q * fitness / average
        nxt /= nxt.sum()
        step = float(np.max(np.abs(nxt - q)))
        q = nxt
        yield q
        if step < cfg.tol:
            return


def ess_evolve(m: PayoffMatrix, cfg: GameConfig) -> PopularityVector:
    if len(m) == 0:
        raise InvariantError("cannot evolve an empty population")
    q, iteration = None, -1
    for iteration, q in enumerate(replicator_iterates(m, cfg)):
        pass
    return PopularityVector(q=q, iteration=iteration)


def otsu_threshold(values: Sequence[float], bins: int) -> float:
    """Bin boundary maximising between-class variance of ``values``.

    The histogram spans [min, max] with ``bins`` equal-width bins. Class
    moments are taken over bin indices, so every sum is an exact integer.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InvariantError("Otsu threshold of an empty vector")
    if not np.all(np.isfinite(v)):
        raise InvariantError("Otsu threshold needs finite values")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return lo

    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    counts = [int(c) for c in counts]
    total = sum(counts)
    total_moment = sum(b * c for b, c in enumerate(counts))

    best_k, best_var = 1, -1.0
    n0 = s0 = 0
    for k in range(1, bins):
        n0 += counts[k - 1]
        s0 += (k - 1) * counts[k - 1]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = s0 / n0
        mu1 = (total_moment - s0) / n1
        var = n0 * n1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_k, best_var = k, var
    return float(edges[best_k])


def play_local_game(pair: BlockPair, cset: CorrespondenceSet, params: PayoffParams,
                    cfg: GameConfig) -> Tuple[int, ...]:
    """Members of ``pair`` whose popularity beats the adaptive threshold."""
    members = pair.member_indices
    if len(members) <= 1:
        return tuple(members)

    matrix = payoff_matrix_for(cset, members, params)
    q = ess_evolve(matrix, cfg).q
    if float(np.ptp(q)) <= FLAT_POPULATION:
        if not np.any(matrix.values):
            logger.warning("Zero-payoff game on block pair (%d, %d); keeping all %d members",
                           pair.left_block, pair.right_block, len(members))
        return tuple(members)

    threshold = otsu_threshold(q, cfg.otsu_bins)
    return tuple(idx for idx, qi in zip(members, q) if qi > threshold)


def play_all_games(pairs: Sequence[BlockPair], cset: CorrespondenceSet, params: PayoffParams,
                   cfg: GameConfig, workers: Optional[int] = None) -> Tuple[int, ...]:
    """Union of every local game's survivors, assembled in pair order."""
    if not pairs:
        return ()

    def play(pair: BlockPair) -> Tuple[int, ...]:
        return play_local_game(pair, cset, params, cfg)

    if workers and workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes: List[Tuple[int, ...]] = list(pool.map(play, pairs))
    else:
        outcomes = [play(pair) for pair in pairs]

    survivors = tuple(idx for outcome in outcomes for idx in outcome)
    logger.info("Local games: %d pairs, %d of %d members survived",
                len(pairs), len(survivors), sum(p.score for p in pairs))
    return survivors
