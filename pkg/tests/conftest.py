import math

import numpy as np
import pytest

from gomeval.model import DistanceMatrix, GalleryMeta, QueryMeta, validate_dataset
from gomeval import synth


def random_dataset(
    seed,
    max_queries=20,
    max_gallery=50,
    distractor_rate=None,
    ties=None,
    n_cams=3,
    junk_rate=0.1,
    cross_camera_filter=True,
):
    """Small labelled dataset with random structure, ties and junk.

    Positive queries borrow the identity of a random non-junk gallery item
    and take a different camera, so they always keep a valid match.
    """
    rng = np.random.default_rng(seed)
    n_q = int(rng.integers(1, max_queries + 1))
    n_g = int(rng.integers(2, max_gallery + 1))
    n_ids = int(rng.integers(1, max(2, n_g // 2) + 1))
    if distractor_rate is None:
        distractor_rate = float(rng.choice([0.0, 0.2, 0.5]))
    if ties is None:
        ties = bool(rng.integers(0, 2))

    g_ids = rng.integers(0, n_ids, size=n_g)
    g_cams = rng.integers(0, n_cams, size=n_g)
    junk = rng.random(n_g) < junk_rate
    junk[int(rng.integers(0, n_g))] = False
    usable = np.flatnonzero(~junk)

    queries = []
    for _ in range(n_q):
        if rng.random() < distractor_rate:
            queries.append(QueryMeta(n_ids + 1000 + len(queries), int(rng.integers(0, n_cams)), True))
            continue
        k = int(rng.choice(usable))
        cam = int(g_cams[k] + rng.integers(1, n_cams)) % n_cams
        queries.append(QueryMeta(int(g_ids[k]), cam, False))
    gallery = [GalleryMeta(int(i), int(c), bool(j)) for i, c, j in zip(g_ids, g_cams, junk)]

    if ties:
        levels = int(rng.integers(2, 12))
        values = rng.integers(0, levels, size=(n_q, n_g)) * float(rng.uniform(0.5, 20.0))
    else:
        values = rng.random((n_q, n_g)) * float(rng.uniform(0.5, 20.0))
    values = values + float(rng.uniform(0, 3))
    return validate_dataset(
        DistanceMatrix(values), queries, gallery, cross_camera_filter=cross_camera_filter
    )


def report_mismatches(a, b, tol=1e-12):
    """Field-by-field comparison of two reports; returns a list of problems."""
    out = []

    def close(x, y):
        if x is None or y is None:
            return x is None and y is None
        return math.isclose(x, y, rel_tol=0, abs_tol=tol)

    for name in ("n_positive", "n_distractor"):
        if getattr(a, name) != getattr(b, name):
            out.append(name)
    for name in ("map", "minp", "MREP", "MFR", "mrep_max", "tau_max", "mvp_max", "tau_nz"):
        if not close(getattr(a, name), getattr(b, name)):
            out.append(f"{name}: {getattr(a, name)} vs {getattr(b, name)}")
    if (a.cmc is None) != (b.cmc is None):
        out.append("cmc presence")
    elif a.cmc is not None:
        out += [f"cmc@{i + 1}" for i, (x, y) in enumerate(zip(a.cmc, b.cmc)) if not close(x, y)]
        if len(a.cmc) != len(b.cmc):
            out.append("cmc length")
    for name in ("mrep_curve", "mrp_curve", "mvp_curve", "mfr_curve"):
        ca, cb = getattr(a, name), getattr(b, name)
        if (ca is None) != (cb is None):
            out.append(f"{name} presence")
            continue
        if ca is None:
            continue
        if ca.taus != cb.taus:
            out.append(f"{name} taus")
            continue
        out += [
            f"{name}[{t}]: {x} vs {y}"
            for t, x, y in zip(ca.taus, ca.values, cb.values)
            if not close(x, y)
        ]
    if (a.roc is None) != (b.roc is None):
        out.append("roc presence")
    elif a.roc is not None:
        for pa, pb in zip(a.roc, b.roc):
            if pa.tau != pb.tau or not close(pa.far, pb.far) or not close(pa.dir, pb.dir):
                out.append(f"roc at {pa.tau}")
        if len(a.roc) != len(b.roc):
            out.append("roc length")
    return out


@pytest.fixture(scope="session")
def table2():
    return synth.table2_fixture()


ACCEPTANCE_LINES = []


def record(criterion, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f": {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
