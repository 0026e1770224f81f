"""Threshold-swept re-ID precision and false rate.

For every decision threshold ``tau`` the items with normalized distance
``<= tau`` are the returned set of a query. For a positive query:

* RP, the retrieval precision, is average precision over the returned prefix.
* VP, the verification precision, is ``tp / (tp + fn + fp)``.
* ReP is ``sqrt(RP * VP)``.

For a distractor query FR is ``min(fp / B, 1)``. Means over queries give the
mReP/mRP/mVP/mFR curves, which are integrated into MREP and MFR.

One sort per row plus cumulative hit counts and cumulative precision-at-hit
sums turn each threshold into a binary search, so the full sweep costs
``O(G log G + T log G)`` per query.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .model import (
    Dataset,
    EvalConfig,
    InvalidConfig,
    NoDistractors,
    NoPositiveQueries,
    ThresholdCurve,
)
from .prep import RankedRow, prepared_matrix, rank_block

# rows per work unit; fixed so results never depend on the worker count
BLOCK_ROWS = 64
# cap on (queries x thresholds) for exact sweeps
EXACT_SWEEP_LIMIT = 50_000_000


@dataclass(frozen=True)
class ThresholdCut:
    """Counts for the returned prefix of one row at ``tau``.

    Fields may also be equal-shape arrays describing many thresholds at once.
    """

    tau: float | np.ndarray
    k: int | np.ndarray
    tp: int | np.ndarray
    fp: int | np.ndarray
    fn: int | np.ndarray
    rp_numerator: float | np.ndarray


@dataclass(frozen=True, eq=False)
class RowPrefix:
    """``cum_tp[k]`` and ``cum_prec[k]`` describe the first ``k`` ranked items."""

    cum_tp: np.ndarray
    cum_prec: np.ndarray
    gt_total: int


def prefix(row: RankedRow) -> RowPrefix:
    n = len(row.gt_flags)
    cum_tp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(row.gt_flags, out=cum_tp[1:])
    hit_prec = np.where(row.gt_flags, cum_tp[1:] / np.arange(1, n + 1), 0.0)
    cum_prec = np.zeros(n + 1, dtype=np.float64)
    np.cumsum(hit_prec, out=cum_prec[1:])
    return RowPrefix(cum_tp=cum_tp, cum_prec=cum_prec, gt_total=row.gt_total)


def cut_at(row: RankedRow, tau, pre: RowPrefix | None = None) -> ThresholdCut:
    """Returned-set counts at ``tau`` (scalar or array of thresholds)."""
    if pre is None:
        pre = prefix(row)
    k = np.searchsorted(row.sorted_distances, tau, side="right")
    tp = pre.cum_tp[k]
    num = pre.cum_prec[k]
    if np.ndim(k) == 0:
        k, tp, num, tau = int(k), int(tp), float(num), float(tau)
    return ThresholdCut(
        tau=tau, k=k, tp=tp, fp=k - tp, fn=pre.gt_total - tp, rp_numerator=num
    )


def _like(x, template):
    return float(x) if np.ndim(template) == 0 else x


def retrieval_precision(
    cut: ThresholdCut, denominator: Literal["returned", "total"] = "returned"
):
    """AP restricted to the returned prefix; 0 when no ground truth is returned.

    With ``denominator="returned"`` precision-at-hit is averaged over the
    returned ground truths, so a prefix holding a single correct match at
    rank 1 scores 1. ``"total"`` averages over every ground truth instead.
    """
    tp = np.asarray(cut.tp)
    base = tp if denominator == "returned" else tp + np.asarray(cut.fn)
    with np.errstate(divide="ignore", invalid="ignore"):
        rp = np.where(tp > 0, np.asarray(cut.rp_numerator) / np.maximum(base, 1), 0.0)
    return _like(rp, cut.tp)


def verification_precision(cut: ThresholdCut):
    tp = np.asarray(cut.tp)
    denom = tp + np.asarray(cut.fn) + np.asarray(cut.fp)
    with np.errstate(divide="ignore", invalid="ignore"):
        vp = np.where(denom > 0, tp / np.maximum(denom, 1), 0.0)
    return _like(vp, cut.tp)


def rep(rp, vp):
    """Geometric mean of retrieval and verification precision."""
    return _like(np.sqrt(np.asarray(rp) * np.asarray(vp)), rp)


def false_rate(cut: ThresholdCut, B: int):
    return _like(np.minimum(np.asarray(cut.fp) / B, 1.0), cut.fp)


def sweep_taus(normalized: np.ndarray, config: EvalConfig) -> np.ndarray:
    taus = config.grid()
    if config.exact_sweep:
        inside = normalized[(normalized >= 0.0) & (normalized <= 1.0)]
        taus = np.union1d(taus, inside)
    return taus


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-query scores (rows follow query index order) and mean curves."""

    taus: np.ndarray
    positive: np.ndarray
    distractor: np.ndarray
    rp: np.ndarray
    vp: np.ndarray
    fr: np.ndarray
    mrep_curve: ThresholdCurve | None
    mrp_curve: ThresholdCurve | None
    mvp_curve: ThresholdCurve | None
    mfr_curve: ThresholdCurve | None

    @property
    def rep(self) -> np.ndarray:
        return np.sqrt(self.rp * self.vp)


def worker_count(threads: int) -> int:
    return (os.cpu_count() or 1) if threads == 0 else threads


def sweep(
    dataset: Dataset,
    config: EvalConfig,
    on_row: Callable[[RankedRow], None] | None = None,
) -> SweepResult:
    """Score every query at every threshold and average into curves.

    ``on_row`` is called once per ranked row (possibly from worker threads,
    never twice for the same row); callers use it to collect extra per-row
    statistics without sorting again.
    """
    normalized = prepared_matrix(dataset, config)
    taus = sweep_taus(normalized, config)
    n_rows = dataset.matrix.rows
    if config.exact_sweep and n_rows * len(taus) > EXACT_SWEEP_LIMIT:
        raise InvalidConfig(
            f"exact sweep needs {len(taus)} thresholds for {n_rows} queries; too large"
        )

    positive = dataset.positive_indices
    distractor = dataset.distractor_indices
    slot = np.full(n_rows, -1, dtype=np.int64)
    slot[positive] = np.arange(len(positive))
    slot[distractor] = np.arange(len(distractor))
    rp = np.zeros((len(positive), len(taus)))
    vp = np.zeros((len(positive), len(taus)))
    fr = np.zeros((len(distractor), len(taus)))

    def work(rows: np.ndarray) -> None:
        for row in rank_block(dataset, normalized, rows, config):
            q = row.query_index
            cut = cut_at(row, taus)
            if dataset.is_distractor[q]:
                fr[slot[q]] = false_rate(cut, config.B)
            else:
                rp[slot[q]] = retrieval_precision(cut, config.rp_denominator)
                vp[slot[q]] = verification_precision(cut)
            if on_row is not None:
                on_row(row)

    blocks = [
        np.arange(s, min(s + BLOCK_ROWS, n_rows)) for s in range(0, n_rows, BLOCK_ROWS)
    ]
    workers = worker_count(config.threads)
    if workers <= 1:
        for b in blocks:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for _ in pool.map(work, blocks):
                pass

    tau_list = taus.tolist()
    mrep = mrp = mvp = mfr = None
    if len(positive):
        mrep = ThresholdCurve(tau_list, np.sqrt(rp * vp).mean(axis=0))
        mrp = ThresholdCurve(tau_list, rp.mean(axis=0))
        mvp = ThresholdCurve(tau_list, vp.mean(axis=0))
    else:
        warnings.warn("no positive queries; mReP curves omitted", NoPositiveQueries, stacklevel=2)
    if len(distractor):
        mean_fr = fr.mean(axis=0)
        if np.any(np.diff(mean_fr) < 0):
            raise AssertionError("mFR curve decreased with tau")
        mfr = ThresholdCurve(tau_list, mean_fr)
    else:
        warnings.warn("no distractor queries; mFR curve omitted", NoDistractors, stacklevel=2)

    return SweepResult(
        taus=taus,
        positive=positive,
        distractor=distractor,
        rp=rp,
        vp=vp,
        fr=fr,
        mrep_curve=mrep,
        mrp_curve=mrp,
        mvp_curve=mvp,
        mfr_curve=mfr,
    )


def integrate(curve: ThresholdCurve) -> float:
    """Trapezoidal area under the curve over its thresholds."""
    return float(np.trapezoid(curve.values, curve.taus))


@dataclass(frozen=True)
class Summary:
    mrep_max: float | None
    tau_max: float | None
    mvp_max: float | None
    tau_nz: float | None
    MREP: float | None
    MFR: float | None


def summarize(
    mrep_curve: ThresholdCurve | None,
    mvp_curve: ThresholdCurve | None,
    mfr_curve: ThresholdCurve | None,
) -> Summary:
    """Peak values and key thresholds.

    ``tau_max`` is the smallest threshold reaching the mReP peak; ``tau_nz``
    is the largest threshold at which mFR is still zero, or 0 when mFR is
    positive everywhere.
    """
    mrep_max = tau_max = mvp_max = MREP = None
    tau_nz = MFR = None
    if mrep_curve is not None:
        values = np.asarray(mrep_curve.values)
        i = int(np.argmax(values))
        mrep_max, tau_max = float(values[i]), mrep_curve.taus[i]
        MREP = integrate(mrep_curve)
    if mvp_curve is not None:
        mvp_max = float(max(mvp_curve.values))
    if mfr_curve is not None:
        zeros = np.flatnonzero(np.asarray(mfr_curve.values) == 0.0)
        tau_nz = mfr_curve.taus[zeros[-1]] if len(zeros) else 0.0
        MFR = integrate(mfr_curve)
    return Summary(mrep_max, tau_max, mvp_max, tau_nz, MREP, MFR)
