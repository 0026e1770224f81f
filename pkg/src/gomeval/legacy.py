"""Established re-ID metrics: CMC, AP/mAP, INP/mINP and open-set DIR/FAR."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import NoDistractors, NoMatch, RocPoint
from .prep import RankedRow


def first_match_rank(row: RankedRow) -> int:
    """1-based position of the first correct match."""
    hits = np.flatnonzero(row.gt_flags)
    if len(hits) == 0:
        raise NoMatch(f"query {row.query_index} has no ground truth in its ranked list")
    return int(hits[0]) + 1


def cmc_curve(ranks: Sequence[int] | np.ndarray, max_rank: int) -> np.ndarray:
    """CMC@1..max_rank from first-match ranks of the positive queries."""
    ranks = np.asarray(ranks, dtype=np.int64)
    if len(ranks) == 0:
        raise ValueError("cmc_curve needs at least one positive query")
    hist = np.bincount(np.minimum(ranks, max_rank + 1), minlength=max_rank + 2)
    return np.cumsum(hist[1 : max_rank + 1]) / len(ranks)


def average_precision(row: RankedRow) -> float:
    """Non-interpolated AP: mean over hit positions p of hits(<= p) / p."""
    hits = np.flatnonzero(row.gt_flags) + 1
    if len(hits) == 0:
        raise NoMatch(f"query {row.query_index} has no ground truth in its ranked list")
    return float(np.mean(np.arange(1, len(hits) + 1) / hits))


def inp(row: RankedRow) -> float:
    """Ground-truth count over the position of the hardest (last) match."""
    hits = np.flatnonzero(row.gt_flags)
    if len(hits) == 0:
        raise NoMatch(f"query {row.query_index} has no ground truth in its ranked list")
    return row.gt_total / float(hits[-1] + 1)


def dir_far(
    first_ranks: np.ndarray,
    first_match_dists: np.ndarray,
    distractor_min_dists: np.ndarray,
    taus: np.ndarray,
    rank_x: int = 1,
) -> list[RocPoint]:
    """Open-set ROC points, one per threshold.

    ``first_ranks`` and ``first_match_dists`` describe the positive queries'
    first correct match; ``distractor_min_dists`` holds each distractor
    query's smallest valid distance. DIR is reported as 0 when there are no
    positive queries.
    """
    distractor_min_dists = np.asarray(distractor_min_dists, dtype=np.float64)
    if len(distractor_min_dists) == 0:
        raise NoDistractors("FAR is undefined without distractor queries")
    taus = np.asarray(taus, dtype=np.float64)
    m = len(distractor_min_dists)
    accepted = np.searchsorted(np.sort(distractor_min_dists), taus, side="right")
    far = accepted / m

    first_ranks = np.asarray(first_ranks)
    n = len(first_ranks)
    if n:
        ok = np.sort(np.asarray(first_match_dists, dtype=np.float64)[first_ranks <= rank_x])
        dir_ = np.searchsorted(ok, taus, side="right") / n
    else:
        dir_ = np.zeros_like(taus)
    return [
        RocPoint(tau=float(t), far=float(f), dir=float(d), rank_x=rank_x)
        for t, f, d in zip(taus, far, dir_)
    ]

