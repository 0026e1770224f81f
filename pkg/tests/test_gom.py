import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gomeval import gom, legacy, pipeline
from gomeval.model import EvalConfig, ThresholdCurve
from gomeval.oracle import brute_force_report
from gomeval.prep import RankedRow, prepared_matrix, rank_block

from conftest import random_dataset, report_mismatches


def make_row(dists, flags):
    flags = np.asarray(flags, dtype=bool)
    return RankedRow(0, np.arange(len(flags)), np.asarray(dists, float), flags, int(flags.sum()))


def all_rows(ds, config):
    return rank_block(ds, prepared_matrix(ds, config), np.arange(ds.matrix.rows), config)


# -- cuts ----------------------------------------------------------------------

def test_cut_counts():
    row = make_row([0.1, 0.2, 0.55], [1, 0, 1])
    cut = gom.cut_at(row, 0.3)
    assert (cut.k, cut.tp, cut.fp, cut.fn) == (2, 1, 1, 1)
    assert gom.cut_at(row, 0.0).k == 0


def test_cut_inclusive_at_equality():
    row = make_row([0.1, 0.3, 0.3, 0.5], [1, 1, 0, 1])
    assert gom.cut_at(row, 0.3).k == 3


def test_cut_matches_linear_scan():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        d = np.sort(rng.integers(0, 8, size=n) / 7)
        flags = rng.random(n) < 0.4
        tau = float(rng.choice([rng.random(), *d]))
        cut = gom.cut_at(make_row(d, flags), tau)
        returned = [i for i in range(n) if d[i] <= tau]
        tp = sum(1 for i in returned if flags[i])
        assert (cut.k, cut.tp, cut.fp, cut.fn) == (
            len(returned), tp, len(returned) - tp, int(flags.sum()) - tp)
        num = sum(sum(flags[: i + 1]) / (i + 1) for i in returned if flags[i])
        assert math.isclose(cut.rp_numerator, num, abs_tol=1e-12)


def test_vector_cut_matches_scalar():
    row = make_row([0.1, 0.2, 0.3, 0.9], [1, 0, 1, 1])
    taus = np.array([0.0, 0.15, 0.3, 1.0])
    vec = gom.cut_at(row, taus)
    for i, t in enumerate(taus):
        s = gom.cut_at(row, float(t))
        assert (vec.k[i], vec.tp[i]) == (s.k, s.tp)
        assert gom.retrieval_precision(vec)[i] == gom.retrieval_precision(s)


# -- per-query scores ------------------------------------------------------------

def test_rp_denominator_is_returned_gts():
    # one correct match returned at rank 1 of three ground truths
    row = make_row([0.2, 0.35, 0.45, 0.55, 0.75], [1, 0, 1, 1, 0])
    cut = gom.cut_at(row, 0.3)
    assert gom.retrieval_precision(cut) == 1.0
    assert gom.retrieval_precision(cut, "total") == pytest.approx(1 / 3)
    assert gom.verification_precision(cut) == pytest.approx(1 / 3)


def test_rp_prefix_ap():
    row = make_row([0.2, 0.35, 0.45, 0.55, 0.75], [1, 0, 1, 1, 0])
    assert gom.retrieval_precision(gom.cut_at(row, 0.6)) == pytest.approx((1 + 2 / 3 + 3 / 4) / 3)


def test_rp_zero_when_nothing_returned():
    row = make_row([0.4, 0.65, 0.7], [1, 1, 1])
    cut = gom.cut_at(row, 0.3)
    assert gom.retrieval_precision(cut) == 0.0
    assert gom.verification_precision(cut) == 0.0


def test_vp_examples():
    from gomeval.gom import ThresholdCut

    assert gom.verification_precision(ThresholdCut(0.3, 2, 2, 0, 1, 2.0)) == pytest.approx(2 / 3)
    assert gom.verification_precision(ThresholdCut(0.6, 4, 3, 1, 0, 0.0)) == 0.75
    assert gom.verification_precision(ThresholdCut(0.6, 3, 3, 0, 0, 3.0)) == 1.0


def test_rep_examples():
    assert round(gom.rep(1.0, 0.67), 4) == 0.8185
    assert round(gom.rep(0.92, 0.75), 4) == 0.8307
    assert gom.rep(0.0, 0.9) == 0.0 and gom.rep(0.7, 0.0) == 0.0


def test_false_rate():
    from gomeval.gom import ThresholdCut

    assert gom.false_rate(ThresholdCut(0.6, 1, 0, 1, 0, 0.0), 5) == 0.2
    assert gom.false_rate(ThresholdCut(0.6, 2, 0, 2, 0, 0.0), 5) == 0.4
    assert gom.false_rate(ThresholdCut(1.0, 9, 0, 9, 0, 0.0), 5) == 1.0


# -- sweep ---------------------------------------------------------------------

def test_sweep_toy_means(table2):
    sw = gom.sweep(table2.dataset, table2.config)
    # exact per-list values at the two thresholds, lists I..IV then V, VI
    rep_t1 = [math.sqrt(2 / 3), 0.0, math.sqrt(1 / 3), math.sqrt(1 / 3)]
    rep_t2 = [1.0, math.sqrt(1 / 3), math.sqrt(29 / 36 * 0.75), math.sqrt(11 / 12 * 0.75)]
    vp_t1 = [2 / 3, 0.0, 1 / 3, 1 / 3]
    rp_t2 = [1.0, 1.0, 29 / 36, 11 / 12]
    assert sw.mrep_curve.value_at(0.3) == pytest.approx(np.mean(rep_t1), abs=1e-12)
    assert sw.mrep_curve.value_at(0.6) == pytest.approx(np.mean(rep_t2), abs=1e-12)
    assert sw.mvp_curve.value_at(0.3) == pytest.approx(np.mean(vp_t1), abs=1e-12)
    assert sw.mrp_curve.value_at(0.6) == pytest.approx(np.mean(rp_t2), abs=1e-12)
    assert sw.mfr_curve.value_at(0.3) == 0.0
    assert sw.mfr_curve.value_at(0.6) == pytest.approx(0.3, abs=1e-12)


def test_sweep_full_return_false_rate(table2):
    sw = gom.sweep(table2.dataset, table2.config)
    valid = table2.dataset.matrix.cols
    assert sw.mfr_curve.value_at(1.0) == min(valid / table2.config.B, 1.0)
    config = EvalConfig(B=3000)
    assert gom.sweep(table2.dataset, config).mfr_curve.value_at(1.0) == pytest.approx(valid / 3000)


@pytest.mark.parametrize("seed", range(25))
def test_sweep_matches_oracle(seed):
    ds = random_dataset(seed, max_queries=20, max_gallery=50)
    config = EvalConfig(B=7)
    assert report_mismatches(pipeline.evaluate(ds, config), brute_force_report(ds, config)) == []


@pytest.mark.parametrize("seed", range(10))
def test_thread_count_does_not_change_results(seed):
    ds = random_dataset(seed + 100, max_queries=64, max_gallery=40)
    base = gom.sweep(ds, EvalConfig(threads=1))
    for threads in (2, 5):
        other = gom.sweep(ds, EvalConfig(threads=threads))
        assert base.mrep_curve == other.mrep_curve and base.mfr_curve == other.mfr_curve
        assert np.array_equal(base.rp, other.rp) and np.array_equal(base.fr, other.fr)


def test_exact_sweep_includes_every_distance(table2):
    sw = gom.sweep(table2.dataset, EvalConfig(B=5, exact_sweep=True))
    taus = set(sw.taus.tolist())
    assert set(EvalConfig().grid().tolist()) <= taus
    assert {0.35, 0.45, 0.55, 0.65} <= taus


# -- properties --------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_score_bounds(seed):
    ds = random_dataset(seed)
    sw = gom.sweep(ds, EvalConfig(B=5))
    if sw.mfr_curve is not None:
        assert np.all(np.diff(sw.mfr_curve.values) >= 0)
    if sw.mrep_curve is None:
        return
    rep = sw.rep
    assert np.all(rep <= (sw.rp + sw.vp) / 2 + 1e-15)
    assert np.array_equal(rep == 0, sw.rp * sw.vp == 0)
    mrep = np.array(sw.mrep_curve.values)
    bound = np.sqrt(np.array(sw.mrp_curve.values) * np.array(sw.mvp_curve.values))
    assert np.all(mrep <= bound + 1e-12)
    for curve in (sw.mrep_curve, sw.mrp_curve, sw.mvp_curve):
        assert all(0.0 <= v <= 1.0 for v in curve.values)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jaccard_identity(seed):
    ds = random_dataset(seed)
    for row in all_rows(ds, EvalConfig()):
        if row.gt_total == 0:
            continue
        cut = gom.cut_at(row, EvalConfig().grid())
        vp = gom.verification_precision(cut)
        for i in np.flatnonzero(cut.tp > 0):
            p = cut.tp[i] / (cut.tp[i] + cut.fp[i])
            r = cut.tp[i] / (cut.tp[i] + cut.fn[i])
            assert abs(vp[i] - p * r / (p + r - p * r)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_full_return_matches_legacy(seed):
    ds = random_dataset(seed)
    for row in all_rows(ds, EvalConfig()):
        if row.gt_total == 0:
            continue
        cut = gom.cut_at(row, 1.0)
        assert cut.k == len(row)
        assert abs(gom.retrieval_precision(cut) - legacy.average_precision(row)) <= 1e-12
        assert gom.verification_precision(cut) == row.gt_total / len(row)


# -- integration and summary --------------------------------------------------------

def test_integrate_constant_and_ramp():
    grid = EvalConfig().grid()
    assert gom.integrate(ThresholdCurve(grid, [0.37] * len(grid))) == pytest.approx(0.37, abs=1e-15)
    assert gom.integrate(ThresholdCurve(grid, grid)) == pytest.approx(0.5, abs=1e-12)


def test_integrate_vs_riemann_oracle():
    rng = np.random.default_rng(8)
    grid = EvalConfig().grid()
    for _ in range(200):
        edges = np.sort(rng.random(int(rng.integers(1, 6))))
        levels = rng.random(len(edges) + 1)

        def f(t):
            return levels[np.searchsorted(edges, t, side="right")]

        fine = (np.arange(100_000) + 0.5) / 100_000
        riemann = f(fine).mean()
        area = gom.integrate(ThresholdCurve(grid, f(grid)))
        assert abs(area - riemann) <= 0.01


def test_summarize_examples():
    s = gom.summarize(ThresholdCurve([0, 0.5, 1], [0, 0.8, 0.3]), None, None)
    assert (s.mrep_max, s.tau_max) == (0.8, 0.5)
    s = gom.summarize(None, None, ThresholdCurve([0, 0.5, 1], [0, 0, 0.4]))
    assert s.tau_nz == 0.5
    s = gom.summarize(ThresholdCurve([0, 0.3, 0.7, 1], [0, 0.6, 0.6, 0.1]), None, None)
    assert s.tau_max == 0.3
    s = gom.summarize(None, None, ThresholdCurve([0, 0.5, 1], [0.1, 0.2, 0.4]))
    assert s.tau_nz == 0.0
