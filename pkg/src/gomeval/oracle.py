"""Slow reference evaluation by explicit set construction.

Nothing here reuses the engine's math: normalization, filtering, ranking and
every metric are re-derived with plain Python loops over small inputs. Use it
only to cross-check :mod:`gomeval.pipeline`.
"""

from __future__ import annotations

from .model import (
    Dataset,
    EvalConfig,
    EvalReport,
    GomError,
    RocPoint,
    ThresholdCurve,
)

MAX_QUERIES = 64
MAX_GALLERY = 64


class TooLarge(GomError):
    pass


def _normalize(values: list[list[float]], mode: str) -> list[list[float]]:
    if mode == "none":
        return [list(r) for r in values]
    flat = [v for r in values for v in r]
    lo, hi = min(flat), max(flat)
    if hi == lo:
        return [[0.0 for _ in r] for r in values]
    return [[(v - lo) / (hi - lo) for v in r] for r in values]


def _definitional_ap(ranking: list[int], relevant: set[int], recall_base: int) -> float:
    """sum_x prec@x * (recall@x - recall@(x-1)) over a ranked list."""
    if recall_base == 0:
        return 0.0
    total = 0.0
    prev_recall = 0.0
    for x in range(1, len(ranking) + 1):
        found = len([k for k in ranking[:x] if k in relevant])
        prec = found / x
        recall = found / recall_base
        total += prec * (recall - prev_recall)
        prev_recall = recall
    return total


def _trapezoid(xs: list[float], ys: list[float]) -> float:
    area = 0.0
    for i in range(1, len(xs)):
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0
    return area


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def brute_force_report(dataset: Dataset, config: EvalConfig | None = None) -> EvalReport:
    config = config or EvalConfig()
    rows, cols = dataset.matrix.shape
    if rows > MAX_QUERIES or cols > MAX_GALLERY:
        raise TooLarge(f"oracle is capped at {MAX_QUERIES}x{MAX_GALLERY}, got {rows}x{cols}")

    d = _normalize(dataset.matrix.values.tolist(), config.normalization)
    n_steps = int(round(1.0 / config.grid_step))
    grid = [i / n_steps for i in range(n_steps + 1)]
    taus = grid
    if config.exact_sweep:
        taus = sorted(set(grid) | {v for r in d for v in r if 0.0 <= v <= 1.0})

    queries = dataset.queries
    gallery = dataset.gallery
    distractor = [bool(x) for x in dataset.is_distractor.tolist()]

    ranks, aps, inps, first_d = [], [], [], []
    min_d = []
    rp_rows, vp_rows, fr_rows = [], [], []

    for q in range(rows):
        query = queries[q]
        valid = []
        for k in range(cols):
            g = gallery[k]
            if g.is_junk:
                continue
            if config.cross_camera_filter and g.identity == query.identity and g.camera == query.camera:
                continue
            valid.append(k)
        relevant = {k for k in valid if gallery[k].identity == query.identity}
        ranking = sorted(valid, key=lambda k: (d[q][k], k))

        if distractor[q]:
            min_d.append(min(d[q][k] for k in valid))
            fr = []
            for tau in taus:
                returned = [k for k in valid if d[q][k] <= tau]
                false_pos = [k for k in returned if k not in relevant]
                fr.append(min(len(false_pos) / config.B, 1.0))
            fr_rows.append(fr)
            continue

        positions = [i + 1 for i, k in enumerate(ranking) if k in relevant]
        ranks.append(positions[0])
        first_d.append(d[q][ranking[positions[0] - 1]])
        aps.append(_definitional_ap(ranking, relevant, len(relevant)))
        inps.append(len(relevant) / positions[-1])

        rp, vp = [], []
        for tau in taus:
            returned = sorted((k for k in valid if d[q][k] <= tau), key=lambda k: (d[q][k], k))
            tp = {k for k in returned if k in relevant}
            fp = {k for k in returned if k not in relevant}
            fn = relevant - tp
            base = len(tp) if config.rp_denominator == "returned" else len(relevant)
            rp.append(_definitional_ap(returned, relevant, base) if tp else 0.0)
            vp.append(len(tp) / (len(tp) + len(fn) + len(fp)))
        rp_rows.append(rp)
        vp_rows.append(vp)

    n, m = len(ranks), len(min_d)
    cmc = map_ = minp = None
    mrep = mrp = mvp = mfr = None
    MREP = mrep_max = tau_max = mvp_max = None
    if n:
        cmc = tuple(len([r for r in ranks if r <= x]) / n for x in range(1, config.max_cmc_rank + 1))
        map_ = _mean(aps)
        minp = _mean(inps)
        rep_vals = [
            _mean([(rp_rows[i][t] * vp_rows[i][t]) ** 0.5 for i in range(n)])
            for t in range(len(taus))
        ]
        mrp_vals = [_mean([rp_rows[i][t] for i in range(n)]) for t in range(len(taus))]
        mvp_vals = [_mean([vp_rows[i][t] for i in range(n)]) for t in range(len(taus))]
        mrep = ThresholdCurve(taus, rep_vals)
        mrp = ThresholdCurve(taus, mrp_vals)
        mvp = ThresholdCurve(taus, mvp_vals)
        best = 0
        for t in range(len(taus)):
            if rep_vals[t] > rep_vals[best]:
                best = t
        mrep_max, tau_max = rep_vals[best], taus[best]
        mvp_max = max(mvp_vals)
        MREP = _trapezoid(taus, rep_vals)

    roc = MFR = tau_nz = None
    if m:
        fr_vals = [_mean([fr_rows[j][t] for j in range(m)]) for t in range(len(taus))]
        mfr = ThresholdCurve(taus, fr_vals)
        MFR = _trapezoid(taus, fr_vals)
        tau_nz = 0.0
        for t, v in zip(taus, fr_vals):
            if v == 0.0:
                tau_nz = t
        points = []
        for tau in grid:
            far = len([v for v in min_d if v <= tau]) / m
            hit = len([i for i in range(n) if ranks[i] <= config.roc_rank and first_d[i] <= tau])
            points.append(RocPoint(tau=tau, far=far, dir=hit / n if n else 0.0, rank_x=config.roc_rank))
        roc = tuple(points)

    return EvalReport(
        n_positive=n,
        n_distractor=m,
        cmc=cmc,
        map=map_,
        minp=minp,
        roc=roc,
        mrep_curve=mrep,
        mrp_curve=mrp,
        mvp_curve=mvp,
        mfr_curve=mfr,
        MREP=MREP,
        MFR=MFR,
        mrep_max=mrep_max,
        tau_max=tau_max,
        mvp_max=mvp_max,
        tau_nz=tau_nz,
        config=config.to_dict(),
    )
