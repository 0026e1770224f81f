"""Deterministic datasets: the six-list toy example and seeded benchmarks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

import numpy as np

from .model import (
    Dataset,
    DistanceMatrix,
    EvalConfig,
    GalleryMeta,
    GomError,
    QueryMeta,
    validate_dataset,
)


class InvalidProfile(GomError):
    pass


TAU_1 = 0.3
TAU_2 = 0.6
TABLE2_B = 5

# Each list: (identity, is_distractor, [(is_gt, distance), ...]).
# Distances are chosen only to realize the required returned sets at
# TAU_1 / TAU_2; every other gallery column sits at 1.0 for that row.
_LISTS = {
    "I": (1, False, [(1, 0.00), (1, 0.20), (1, 0.55), (0, 0.70), (0, 0.80)]),
    "II": (2, False, [(1, 0.40), (1, 0.65), (1, 0.70), (0, 0.80), (0, 0.90)]),
    "III": (3, False, [(1, 0.20), (0, 0.35), (1, 0.45), (1, 0.55), (0, 0.75)]),
    "IV": (4, False, [(1, 0.20), (1, 0.40), (0, 0.50), (1, 0.55), (0, 0.75)]),
    "V": (5, True, [(0, 0.40), (0, 0.50), (0, 0.70), (0, 0.80)]),
    "VI": (6, True, [(0, 0.45), (0, 0.65), (0, 0.75), (0, 0.85)]),
}

# Printed values of the toy-example table, keyed by list then column.
TABLE2_EXPECTED: dict[str, dict[str, float]] = {
    "I": {"cmc1": 1, "ap": 1, "inp": 1, "rp_t1": 1, "vp_t1": 0.67, "rep_t1": 0.82,
          "rp_t2": 1, "vp_t2": 1, "rep_t2": 1},
    "II": {"cmc1": 1, "ap": 1, "inp": 1, "rp_t1": 0, "vp_t1": 0, "rep_t1": 0,
           "rp_t2": 1, "vp_t2": 0.33, "rep_t2": 0.57},
    "III": {"cmc1": 1, "ap": 0.81, "inp": 0.75, "rp_t1": 1, "vp_t1": 0.33, "rep_t1": 0.57,
            "rp_t2": 0.81, "vp_t2": 0.75, "rep_t2": 0.78},
    "IV": {"cmc1": 1, "ap": 0.92, "inp": 0.75, "rp_t1": 1, "vp_t1": 0.33, "rep_t1": 0.57,
           "rp_t2": 0.92, "vp_t2": 0.75, "rep_t2": 0.83},
    "V": {"fr_t1": 0, "fr_t2": 0.4},
    "VI": {"fr_t1": 0, "fr_t2": 0.2},
}
TABLE2_FAR = {"far_t1": 0.0, "far_t2": 1.0}
TABLE2_LISTS = tuple(_LISTS)


@dataclass(frozen=True, eq=False)
class Table2Fixture:
    dataset: Dataset
    config: EvalConfig
    tau_1: float
    tau_2: float
    expected: dict[str, dict[str, float]]
    expected_far: dict[str, float]
    lists: tuple[str, ...]


def table2_dataset() -> Dataset:
    """Six queries (one per list) over one shared 28-item gallery."""
    cols: list[tuple[int, int, float]] = []  # (owner row, identity, distance)
    for row, (ident, _, items) in enumerate(_LISTS.values()):
        for is_gt, d in items:
            cols.append((row, ident if is_gt else 100 + len(cols), d))
    values = np.ones((len(_LISTS), len(cols)))
    for c, (row, _, d) in enumerate(cols):
        values[row, c] = d
    queries = [QueryMeta(identity=i, camera=0, is_distractor=f) for i, f, _ in _LISTS.values()]
    gallery = [GalleryMeta(identity=ident, camera=1) for _, ident, _ in cols]
    return validate_dataset(DistanceMatrix(values), queries, gallery)


def table2_fixture() -> Table2Fixture:
    return Table2Fixture(
        dataset=table2_dataset(),
        config=EvalConfig(B=TABLE2_B),
        tau_1=TAU_1,
        tau_2=TAU_2,
        expected=TABLE2_EXPECTED,
        expected_far=TABLE2_FAR,
        lists=TABLE2_LISTS,
    )


@dataclass(frozen=True)
class ErrorProfile:
    """Knobs for :func:`generate`.

    ``retrieval_noise`` is the std-dev of Gaussian jitter on ground-truth
    distances, ``verification_offset`` shifts all of them, and
    ``distractor_density`` is the share of a distractor row placed in the
    near band.
    """

    seed: int = 0
    n_pos_queries: int = 100
    n_distractor_queries: int = 10
    gallery_size: int = 500
    gts_per_query: int = 4
    retrieval_noise: float = 0.0
    verification_offset: float = 0.0
    distractor_density: float = 0.05
    n_cameras: int = 2
    junk_fraction: float = 0.0

    def __post_init__(self) -> None:
        problems = []
        if self.n_pos_queries < 0 or self.n_distractor_queries < 0:
            problems.append("query counts must be nonnegative")
        if self.n_pos_queries + self.n_distractor_queries < 1:
            problems.append("need at least one query")
        if self.gts_per_query < 1:
            problems.append("gts_per_query must be >= 1")
        if self.gallery_size < self.gts_per_query:
            problems.append("gallery_size must be >= gts_per_query")
        if self.retrieval_noise < 0:
            problems.append("retrieval_noise must be >= 0")
        if not 0 <= self.distractor_density <= 1:
            problems.append("distractor_density must be in [0, 1]")
        if not 0 <= self.junk_fraction < 1:
            problems.append("junk_fraction must be in [0, 1)")
        if self.n_cameras < 2:
            problems.append("n_cameras must be >= 2")
        if problems:
            raise InvalidProfile("; ".join(problems))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ErrorProfile:
        if not isinstance(data, Mapping):
            raise InvalidProfile("profile must be a JSON object")
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise InvalidProfile(f"unknown profile keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidProfile(f"{key} must be a number")
            if known[key] == "int":
                if int(value) != value:
                    raise InvalidProfile(f"{key} must be an integer")
                value = int(value)
            kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def generate(profile: ErrorProfile) -> Dataset:
    """Seeded synthetic benchmark.

    Algorithm (all draws from one ``numpy.random.default_rng(seed)`` in this
    order):

    1. ``n_ids = min(n_pos, gallery_size // gts_per_query)`` identities, each
       with ``gts_per_query`` gallery items; the remaining gallery items get
       unique background identities. Gallery order is a random permutation.
    2. Positive query ``i`` has identity ``i % n_ids``; distractor queries
       get identities absent from the gallery.
    3. Cameras are uniform over ``n_cameras``. A positive query whose
       ground truths all share its camera is moved to another camera, so
       every positive query keeps a cross-camera match.
    4. Background items turn junk with probability ``junk_fraction``.
    5. Distances: negatives U(0.6, 1.0); ground truths U(0, 0.4) plus
       ``verification_offset`` plus ``retrieval_noise`` * N(0, 1), clipped
       at 0; each distractor-row entry drops to U(0, 0.4) with probability
       ``distractor_density``.
    """
    p = profile
    rng = np.random.default_rng(p.seed)
    n_pos, n_neg, G, gts = p.n_pos_queries, p.n_distractor_queries, p.gallery_size, p.gts_per_query
    n_ids = max(1, min(n_pos, G // gts))

    slots = np.arange(G)
    g_ids = np.where(slots < n_ids * gts, slots % n_ids, n_ids + slots)
    g_ids = g_ids[rng.permutation(G)]
    q_ids = np.concatenate([np.arange(n_pos) % n_ids, n_ids + G + np.arange(n_neg)])
    distractor = np.arange(n_pos + n_neg) >= n_pos

    q_cams = rng.integers(0, p.n_cameras, size=n_pos + n_neg)
    g_cams = rng.integers(0, p.n_cameras, size=G)
    if n_pos:
        is_gt_item = g_ids < n_ids
        by_id = np.argsort(np.where(is_gt_item, g_ids, n_ids), kind="stable")[: n_ids * gts]
        cams_by_id = g_cams[by_id].reshape(n_ids, gts)  # rows: identity 0..n_ids-1
        first = cams_by_id[:, 0]
        uniform = (cams_by_id == first[:, None]).all(axis=1)
        pos_ids = q_ids[:n_pos]
        stuck = uniform[pos_ids] & (q_cams[:n_pos] == first[pos_ids])
        q_cams[:n_pos][stuck] = (first[pos_ids][stuck] + 1) % p.n_cameras
    else:
        is_gt_item = np.zeros(G, dtype=bool)

    junk = (rng.random(G) < p.junk_fraction) & ~is_gt_item

    D = rng.uniform(0.6, 1.0, size=(n_pos + n_neg, G))
    if n_pos:
        gt_mask = q_ids[:n_pos, None] == g_ids[None, :]
        n_gt = int(gt_mask.sum())
        gt_d = rng.uniform(0.0, 0.4, size=n_gt) + p.verification_offset
        if p.retrieval_noise > 0:
            gt_d += p.retrieval_noise * rng.standard_normal(n_gt)
        D[:n_pos][gt_mask] = np.maximum(gt_d, 0.0)
    if n_neg:
        near = rng.random((n_neg, G)) < p.distractor_density
        D[n_pos:][near] = rng.uniform(0.0, 0.4, size=int(near.sum()))

    queries = [
        QueryMeta(identity=int(i), camera=int(c), is_distractor=bool(f))
        for i, c, f in zip(q_ids, q_cams, distractor)
    ]
    gallery = [
        GalleryMeta(identity=int(i), camera=int(c), is_junk=bool(j))
        for i, c, j in zip(g_ids, g_cams, junk)
    ]
    return validate_dataset(DistanceMatrix(D), queries, gallery)
