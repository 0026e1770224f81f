"""Domain types shared across the evaluation engine.

Queries are split into two groups: positive queries, which have at least one
valid ground-truth match in the gallery, and distractor queries, whose
identity never appears there. Every metric takes one shared
``Dataset`` handle as input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np


class GomError(Exception):
    """Base class for every error raised by this package."""


class Violation(GomError):
    """A single problem found while validating a dataset."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class DimensionMismatch(Violation):
    pass


class NonFiniteDistance(Violation):
    pass


class LabelContradiction(Violation):
    pass


class InvalidDataset(GomError):
    """Raised by :func:`validate_dataset`; carries every violation found."""

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = [f"{type(v).__name__}: {v}" for v in self.violations]
        super().__init__("; ".join(lines))


class EmptyValidGallery(GomError):
    def __init__(self, query: int | None = None):
        where = "" if query is None else f" for query {query}"
        super().__init__(f"no gallery item survives filtering{where}")
        self.query = query


class NoMatch(GomError):
    pass


class NoPositiveQueries(UserWarning):
    pass


class NoDistractors(UserWarning):
    pass


class InvalidConfig(GomError):
    pass


@dataclass(frozen=True)
class DistanceMatrix:
    """Dense query-by-gallery distances. The array is frozen on construction."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch(f"distance matrix must be 2-D, got {arr.ndim}-D")
        arr = arr.view()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class QueryMeta:
    identity: int
    camera: int
    is_distractor: bool = False


@dataclass(frozen=True)
class GalleryMeta:
    identity: int
    camera: int
    is_junk: bool = False


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation settings.

    ``rp_denominator`` selects the averaging base of the thresholded
    retrieval precision: ``"returned"`` divides by the returned ground truths,
    ``"total"`` by all ground truths of the query.
    """

    grid_step: float = 0.01
    B: int = 3000
    normalization: Literal["global_minmax", "none"] = "global_minmax"
    cross_camera_filter: bool = True
    exact_sweep: bool = False
    max_cmc_rank: int = 50
    rp_denominator: Literal["returned", "total"] = "returned"
    roc_rank: int = 1
    threads: int = 1

    def __post_init__(self) -> None:
        if not (0 < self.grid_step <= 1):
            raise InvalidConfig(f"grid_step must be in (0, 1], got {self.grid_step}")
        inv = 1.0 / self.grid_step
        if abs(inv - round(inv)) > 1e-9:
            raise InvalidConfig(f"1/grid_step must be an integer, got {inv}")
        if int(self.B) != self.B or self.B < 1:
            raise InvalidConfig(f"B must be a positive integer, got {self.B}")
        if self.normalization not in ("global_minmax", "none"):
            raise InvalidConfig(f"unknown normalization {self.normalization!r}")
        if self.rp_denominator not in ("returned", "total"):
            raise InvalidConfig(f"unknown rp_denominator {self.rp_denominator!r}")
        if self.max_cmc_rank < 1 or self.roc_rank < 1:
            raise InvalidConfig("max_cmc_rank and roc_rank must be positive")
        if self.threads < 0:
            raise InvalidConfig("threads must be >= 0")

    @property
    def grid_intervals(self) -> int:
        return int(round(1.0 / self.grid_step))

    def grid(self) -> np.ndarray:
        """Thresholds 0, step, ..., 1 inclusive."""
        n = self.grid_intervals
        return np.arange(n + 1, dtype=np.float64) / n

    def to_dict(self) -> dict[str, Any]:
        # threads is an execution detail and must not leak into reports
        return {
            "grid_step": self.grid_step,
            "B": int(self.B),
            "normalization": self.normalization,
            "cross_camera_filter": self.cross_camera_filter,
            "exact_sweep": self.exact_sweep,
            "max_cmc_rank": self.max_cmc_rank,
            "rp_denominator": self.rp_denominator,
            "roc_rank": self.roc_rank,
        }


@dataclass(frozen=True)
class ThresholdCurve:
    taus: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        taus = tuple(float(t) for t in self.taus)
        values = tuple(float(v) for v in self.values)
        if len(taus) != len(values):
            raise ValueError("taus and values differ in length")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("taus must be strictly ascending")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.taus)

    def value_at(self, tau: float) -> float:
        i = self.taus.index(tau)
        return self.values[i]


@dataclass(frozen=True)
class RocPoint:
    tau: float
    far: float
    dir: float
    rank_x: int


@dataclass(frozen=True)
class EvalReport:
    """Every summary and curve for one evaluated method.

    Fields that need positive queries are ``None`` when there are none, and
    likewise for the distractor-only fields.
    """

    n_positive: int
    n_distractor: int
    cmc: tuple[float, ...] | None
    map: float | None
    minp: float | None
    roc: tuple[RocPoint, ...] | None
    mrep_curve: ThresholdCurve | None
    mrp_curve: ThresholdCurve | None
    mvp_curve: ThresholdCurve | None
    mfr_curve: ThresholdCurve | None
    MREP: float | None
    MFR: float | None
    mrep_max: float | None
    tau_max: float | None
    mvp_max: float | None
    tau_nz: float | None
    config: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def cmc1(self) -> float | None:
        return None if self.cmc is None else self.cmc[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated dataset handle.

    Instances come from :func:`validate_dataset`. Labels are also kept as
    flat arrays for vectorized use; ``is_distractor`` holds the effective
    split, which lenient validation may have corrected.
    """

    matrix: DistanceMatrix
    queries: tuple[QueryMeta, ...]
    gallery: tuple[GalleryMeta, ...]
    query_ids: np.ndarray
    query_cams: np.ndarray
    is_distractor: np.ndarray
    gallery_ids: np.ndarray
    gallery_cams: np.ndarray
    is_junk: np.ndarray
    warnings: tuple[str, ...] = ()

    @property
    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_distractor)

    @property
    def distractor_indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_distractor)

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(~self.is_distractor))

    @property
    def n_distractor(self) -> int:
        return int(np.count_nonzero(self.is_distractor))

    def valid_mask(self, cross_camera_filter: bool) -> np.ndarray:
        """Boolean (rows, cols) mask of gallery items each query may see."""
        mask = np.broadcast_to(~self.is_junk, self.matrix.shape).copy()
        if cross_camera_filter:
            same = (self.query_ids[:, None] == self.gallery_ids[None, :]) & (
                self.query_cams[:, None] == self.gallery_cams[None, :]
            )
            mask &= ~same
        return mask


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def validate_dataset(
    matrix: DistanceMatrix | np.ndarray,
    queries: Sequence[QueryMeta],
    gallery: Sequence[GalleryMeta],
    *,
    cross_camera_filter: bool = True,
    lenient: bool = False,
) -> Dataset:
    """Check labels against the matrix and return a :class:`Dataset`.

    Raises :class:`InvalidDataset` listing every violation found. With
    ``lenient=True`` label contradictions only produce a warning and the
    query is reclassified by whether it actually has a valid match.
    """
    if not isinstance(matrix, DistanceMatrix):
        matrix = DistanceMatrix(np.asarray(matrix, dtype=np.float64))
    queries = tuple(queries)
    gallery = tuple(gallery)
    rows, cols = matrix.shape

    violations: list[Violation] = []
    if rows < 1 or cols < 1:
        violations.append(DimensionMismatch(f"matrix must be non-empty, got {rows}x{cols}"))
    if len(queries) != rows:
        violations.append(
            DimensionMismatch(f"matrix has {rows} rows but {len(queries)} query labels")
        )
    if len(gallery) != cols:
        violations.append(
            DimensionMismatch(f"matrix has {cols} cols but {len(gallery)} gallery labels")
        )
    if violations:
        raise InvalidDataset(violations)

    bad = ~np.isfinite(matrix.values)
    if bad.any():
        for r, c in np.argwhere(bad)[:20]:
            violations.append(
                NonFiniteDistance(
                    f"non-finite distance {matrix.values[r, c]} at ({r}, {c})", int(r), int(c)
                )
            )

    q_ids = np.array([q.identity for q in queries], dtype=np.int64)
    q_cams = np.array([q.camera for q in queries], dtype=np.int64)
    flagged = np.array([q.is_distractor for q in queries], dtype=bool)
    g_ids = np.array([g.identity for g in gallery], dtype=np.int64)
    g_cams = np.array([g.camera for g in gallery], dtype=np.int64)
    junk = np.array([g.is_junk for g in gallery], dtype=bool)

    for c in np.flatnonzero((g_ids < 0) | (g_cams < 0))[:20]:
        violations.append(
            LabelContradiction(f"gallery item {c} has a negative identity or camera", col=int(c))
        )

    # Count same-identity gallery items per query without a dense rows x cols
    # comparison: group gallery items by (identity, camera).
    present = ~junk
    id_count: dict[int, int] = {}
    id_cam_count: dict[tuple[int, int], int] = {}
    for gid, gcam in zip(g_ids[present].tolist(), g_cams[present].tolist()):
        id_count[gid] = id_count.get(gid, 0) + 1
        id_cam_count[(gid, gcam)] = id_cam_count.get((gid, gcam), 0) + 1

    effective = flagged.copy()
    notes: list[str] = []
    for r, (qid, qcam) in enumerate(zip(q_ids.tolist(), q_cams.tolist())):
        total = id_count.get(qid, 0)
        valid = total - (id_cam_count.get((qid, qcam), 0) if cross_camera_filter else 0)
        problem = None
        if flagged[r] and total > 0:
            problem = f"distractor query {r} (identity {qid}) has {total} gallery matches"
        elif not flagged[r] and valid == 0:
            problem = f"query {r} (identity {qid}) has no valid gallery match"
        if problem is None:
            continue
        if lenient:
            effective[r] = valid == 0
            kind = "distractor" if effective[r] else "positive"
            notes.append(f"{problem}; treated as {kind}")
        else:
            violations.append(LabelContradiction(problem, row=r))

    if violations:
        raise InvalidDataset(violations)

    return Dataset(
        matrix=matrix,
        queries=queries,
        gallery=gallery,
        query_ids=_frozen(q_ids),
        query_cams=_frozen(q_cams),
        is_distractor=_frozen(effective),
        gallery_ids=_frozen(g_ids),
        gallery_cams=_frozen(g_cams),
        is_junk=_frozen(junk),
        warnings=tuple(notes),
    )
