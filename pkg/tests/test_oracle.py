import numpy as np
import pytest

from gomeval import pipeline
from gomeval.model import DistanceMatrix, EvalConfig, GalleryMeta, QueryMeta, validate_dataset
from gomeval.oracle import TooLarge, brute_force_report

from conftest import random_dataset, report_mismatches


def test_toy_fixture_agrees(table2):
    for config in (table2.config, EvalConfig(B=5, exact_sweep=True)):
        engine = pipeline.evaluate(table2.dataset, config)
        assert report_mismatches(engine, brute_force_report(table2.dataset, config)) == []


def test_single_gt():
    ds = validate_dataset(DistanceMatrix(np.array([[0.5]])), [QueryMeta(1, 0)], [GalleryMeta(1, 1)])
    r = brute_force_report(ds)
    assert r.map == r.cmc[0] == r.minp == 1.0


def test_size_cap():
    ds = random_dataset(0, max_queries=1, max_gallery=2)
    big = validate_dataset(np.zeros((65, 2)), [QueryMeta(9, 0, True)] * 65,
                           [GalleryMeta(0, 0), GalleryMeta(1, 0)])
    with pytest.raises(TooLarge):
        brute_force_report(big)
    brute_force_report(ds)


@pytest.mark.parametrize(
    "config",
    [
        EvalConfig(rp_denominator="total", B=4),
        EvalConfig(cross_camera_filter=False, B=2),
        EvalConfig(grid_step=0.05, exact_sweep=True, B=3),
        EvalConfig(grid_step=0.1, max_cmc_rank=5, roc_rank=3),
    ],
    ids=["total", "nofilter", "exact", "coarse"],
)
@pytest.mark.parametrize("seed", range(8))
def test_config_variants_agree(config, seed):
    ds = random_dataset(seed + 500, cross_camera_filter=config.cross_camera_filter,
                        distractor_rate=0.3)
    assert report_mismatches(pipeline.evaluate(ds, config), brute_force_report(ds, config)) == []


def test_unnormalized_agrees():
    ds = validate_dataset(
        np.random.default_rng(0).random((6, 10)),
        [QueryMeta(i % 3, 0) for i in range(5)] + [QueryMeta(99, 0, True)],
        [GalleryMeta(i % 4, 1) for i in range(10)],
    )
    config = EvalConfig(normalization="none", B=3)
    assert report_mismatches(pipeline.evaluate(ds, config), brute_force_report(ds, config)) == []
