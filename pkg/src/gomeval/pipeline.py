"""End-to-end evaluation: rank once, then compute legacy and threshold metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gom, legacy
from .model import Dataset, EvalConfig, EvalReport
from .prep import RankedRow


@dataclass(frozen=True, eq=False)
class Evaluation:
    """A report plus the per-query arrays it was aggregated from."""

    report: EvalReport
    sweep: gom.SweepResult
    first_rank: np.ndarray
    ap: np.ndarray
    inp: np.ndarray

    def per_query(self) -> dict:
        """Per-query breakdown in query index order."""
        taus = self.sweep.taus.tolist()
        rows: list[dict] = []
        pos_slot = {int(q): i for i, q in enumerate(self.sweep.positive)}
        neg_slot = {int(q): i for i, q in enumerate(self.sweep.distractor)}
        for q in range(len(pos_slot) + len(neg_slot)):
            if q in pos_slot:
                i = pos_slot[q]
                rows.append(
                    {
                        "query": q,
                        "kind": "positive",
                        "first_match_rank": int(self.first_rank[i]),
                        "ap": float(self.ap[i]),
                        "inp": float(self.inp[i]),
                        "rp": self.sweep.rp[i].tolist(),
                        "vp": self.sweep.vp[i].tolist(),
                        "rep": self.sweep.rep[i].tolist(),
                    }
                )
            else:
                i = neg_slot[q]
                rows.append({"query": q, "kind": "distractor", "fr": self.sweep.fr[i].tolist()})
        return {"taus": taus, "queries": rows}


def run(dataset: Dataset, config: EvalConfig | None = None) -> Evaluation:
    config = config or EvalConfig()
    n, m = dataset.n_positive, dataset.n_distractor
    slot = np.full(dataset.matrix.rows, -1, dtype=np.int64)
    slot[dataset.positive_indices] = np.arange(n)
    slot[dataset.distractor_indices] = np.arange(m)

    first_rank = np.zeros(n, dtype=np.int64)
    ap = np.zeros(n)
    inp = np.zeros(n)
    first_dist = np.zeros(n)
    min_dist = np.zeros(m)

    def collect(row: RankedRow) -> None:
        i = slot[row.query_index]
        if dataset.is_distractor[row.query_index]:
            min_dist[i] = row.sorted_distances[0]
            return
        r = legacy.first_match_rank(row)
        first_rank[i] = r
        first_dist[i] = row.sorted_distances[r - 1]
        ap[i] = legacy.average_precision(row)
        inp[i] = legacy.inp(row)

    sw = gom.sweep(dataset, config, on_row=collect)
    summary = gom.summarize(sw.mrep_curve, sw.mvp_curve, sw.mfr_curve)

    cmc = map_ = minp = None
    if n:
        cmc = tuple(legacy.cmc_curve(first_rank, config.max_cmc_rank).tolist())
        map_ = float(ap.mean())
        minp = float(inp.mean())
    roc = None
    if m:
        roc = tuple(legacy.dir_far(first_rank, first_dist, min_dist, config.grid(), config.roc_rank))

    report = EvalReport(
        n_positive=n,
        n_distractor=m,
        cmc=cmc,
        map=map_,
        minp=minp,
        roc=roc,
        mrep_curve=sw.mrep_curve,
        mrp_curve=sw.mrp_curve,
        mvp_curve=sw.mvp_curve,
        mfr_curve=sw.mfr_curve,
        MREP=summary.MREP,
        MFR=summary.MFR,
        mrep_max=summary.mrep_max,
        tau_max=summary.tau_max,
        mvp_max=summary.mvp_max,
        tau_nz=summary.tau_nz,
        config=config.to_dict(),
    )
    return Evaluation(report=report, sweep=sw, first_rank=first_rank, ap=ap, inp=inp)


def evaluate(dataset: Dataset, config: EvalConfig | None = None) -> EvalReport:
    return run(dataset, config).report
