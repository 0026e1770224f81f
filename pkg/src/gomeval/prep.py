"""Distance normalization, gallery filtering and per-query ranking."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    Dataset,
    DistanceMatrix,
    EmptyValidGallery,
    EvalConfig,
    GalleryMeta,
    QueryMeta,
)


class DegenerateMatrix(UserWarning):
    """All distances are equal; normalization maps everything to 0."""


@dataclass(frozen=True, eq=False)
class RankedRow:
    """One query's valid gallery items in ascending distance order."""

    query_index: int
    order: np.ndarray
    sorted_distances: np.ndarray
    gt_flags: np.ndarray
    gt_total: int

    def __len__(self) -> int:
        return len(self.order)


def minmax_bounds(values: np.ndarray) -> tuple[float, float]:
    return float(values.min()), float(values.max())


def normalize_values(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Apply ``(v - lo) / (hi - lo)``; returns zeros when ``hi == lo``."""
    out = np.subtract(values, lo, dtype=np.float64)
    if hi == lo:
        out[...] = 0.0
        return out
    out /= hi - lo
    return out


def normalize_distances(matrix: DistanceMatrix) -> DistanceMatrix:
    """Global min-max scaling of the whole matrix into [0, 1]."""
    lo, hi = minmax_bounds(matrix.values)
    if hi == lo:
        warnings.warn(
            f"all distances equal {lo}; normalized matrix is all zeros",
            DegenerateMatrix,
            stacklevel=2,
        )
    return DistanceMatrix(normalize_values(matrix.values, lo, hi))


def filter_gallery(
    query: QueryMeta, gallery: Sequence[GalleryMeta], config: EvalConfig
) -> np.ndarray:
    """Indices of gallery items the query is scored against, in gallery order.

    Junk items never survive; same-identity items from the query's own
    camera are dropped when ``config.cross_camera_filter`` is set.
    """
    keep = [
        k
        for k, g in enumerate(gallery)
        if not g.is_junk
        and not (
            config.cross_camera_filter
            and g.identity == query.identity
            and g.camera == query.camera
        )
    ]
    if not keep:
        raise EmptyValidGallery()
    return np.asarray(keep, dtype=np.int64)


def rank_row(
    distances: np.ndarray,
    valid: np.ndarray,
    query: QueryMeta,
    gallery_ids: np.ndarray,
    query_index: int = 0,
) -> RankedRow:
    """Sort the valid part of one distance row.

    Ties keep ascending gallery-index order (stable sort over indices that
    are already ascending).
    """
    valid = np.asarray(valid, dtype=np.int64)
    if len(valid) == 0:
        raise EmptyValidGallery(query_index)
    sub = np.asarray(distances, dtype=np.float64)[valid]
    perm = np.argsort(sub, kind="stable")
    order = valid[perm]
    gt = np.asarray(gallery_ids)[order] == query.identity
    return RankedRow(
        query_index=query_index,
        order=order,
        sorted_distances=sub[perm],
        gt_flags=gt,
        gt_total=int(np.count_nonzero(gt)),
    )


def block_valid_mask(dataset: Dataset, rows: np.ndarray, cross_camera_filter: bool) -> np.ndarray:
    q_ids = dataset.query_ids[rows]
    mask = np.broadcast_to(~dataset.is_junk, (len(rows), dataset.matrix.cols)).copy()
    if cross_camera_filter:
        same_id = q_ids[:, None] == dataset.gallery_ids[None, :]
        same_id &= dataset.query_cams[rows][:, None] == dataset.gallery_cams[None, :]
        mask &= ~same_id
    return mask


def rank_block(
    dataset: Dataset,
    normalized: np.ndarray,
    rows: np.ndarray,
    config: EvalConfig,
) -> list[RankedRow]:
    """Rank a block of query rows at once.

    Produces exactly what :func:`rank_row` would for each row: filtered-out
    items are pushed to the end as ``+inf`` and trimmed, and a stable sort
    over the full row preserves the by-index tie order.
    """
    mask = block_valid_mask(dataset, rows, config.cross_camera_filter)
    block = np.where(mask, normalized[rows], np.inf)
    order = np.argsort(block, axis=1, kind="stable")
    sorted_d = np.take_along_axis(block, order, axis=1)
    gt = dataset.gallery_ids[order] == dataset.query_ids[rows][:, None]
    n_valid = mask.sum(axis=1)

    out = []
    for j, q in enumerate(rows.tolist()):
        n = int(n_valid[j])
        if n == 0:
            raise EmptyValidGallery(q)
        flags = gt[j, :n]
        out.append(
            RankedRow(
                query_index=q,
                order=order[j, :n],
                sorted_distances=sorted_d[j, :n],
                gt_flags=flags,
                gt_total=int(np.count_nonzero(flags)),
            )
        )
    return out


def prepared_matrix(dataset: Dataset, config: EvalConfig) -> np.ndarray:
    """Distances the metrics run on, normalized per ``config``."""
    if config.normalization == "none":
        values = dataset.matrix.values
        if values.min() < 0 or values.max() > 1:
            warnings.warn(
                "unnormalized distances fall outside [0, 1]; thresholds only cover [0, 1]",
                stacklevel=2,
            )
        return values
    return normalize_distances(dataset.matrix).values
