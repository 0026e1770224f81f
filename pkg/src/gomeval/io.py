"""File formats: distance matrices, label files, reports, curves and plots.

Binary matrix layout (all little-endian)::

    offset  size  field
    0       4     magic b"GOMD"
    4       4     version, uint32 (= 1)
    8       8     rows, uint64
    16      8     cols, uint64
    24      8*r*c payload, float64, row-major
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .model import (
    DistanceMatrix,
    EvalReport,
    GalleryMeta,
    GomError,
    QueryMeta,
    RocPoint,
    ThresholdCurve,
)

MAGIC = b"GOMD"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")
REPORT_SCHEMA = "gomeval.report/1"


class FormatError(GomError):
    pass


class BadMagic(FormatError):
    pass


class VersionUnsupported(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class RaggedCsv(FormatError):
    pass


class UnknownFlag(FormatError):
    pass


class SchemaMismatch(FormatError):
    pass


def write_distance_matrix(values: np.ndarray | DistanceMatrix, path: str | Path) -> None:
    if isinstance(values, DistanceMatrix):
        values = values.values
    arr = np.ascontiguousarray(values, dtype="<f8")
    if arr.ndim != 2:
        raise FormatError("distance matrix must be 2-D")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1]))
        arr.tofile(fh)


def _read_binary(path: Path) -> np.ndarray:
    size = path.stat().st_size
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if not MAGIC.startswith(head[:4]):
            raise BadMagic(f"{path}: expected magic {MAGIC!r} at byte 0, got {head[:4]!r}")
        if len(head) < HEADER.size:
            raise TruncatedPayload(f"{path}: header truncated at byte {len(head)}")
        magic, version, rows, cols = HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagic(f"{path}: expected magic {MAGIC!r} at byte 0, got {magic!r}")
        if version != VERSION:
            raise VersionUnsupported(f"{path}: version {version} at byte 4 (supported: {VERSION})")
        expected = rows * cols * 8
        actual = size - HEADER.size
        if actual != expected:
            raise TruncatedPayload(
                f"{path}: payload at byte {HEADER.size} is {actual} bytes, "
                f"expected {expected} for {rows}x{cols}"
            )
        data = np.fromfile(fh, dtype="<f8", count=rows * cols)
    return data.astype(np.float64, copy=False).reshape(rows, cols)


def _read_csv_matrix(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                row = [float(c) for c in cells]
            except ValueError:
                raise RaggedCsv(f"{path}:{lineno}: non-numeric cell") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise RaggedCsv(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
            rows.append(row)
    if not rows:
        raise RaggedCsv(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def read_distance_matrix(
    path: str | Path, format: Literal["binary", "csv"] = "binary"
) -> DistanceMatrix:
    path = Path(path)
    if format == "binary":
        return DistanceMatrix(_read_binary(path))
    if format == "csv":
        return DistanceMatrix(_read_csv_matrix(path))
    raise FormatError(f"unknown matrix format {format!r}")


def write_csv_matrix(values: np.ndarray, path: str | Path) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(values):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_label_rows(path: Path, allowed_flag: str) -> list[tuple[int, int, bool]]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "camera", "flag"]:
            raise FormatError(f"{path}:1: header must be 'id,camera,flag'")
        for lineno, rec in enumerate(reader, 2):
            if not rec:
                continue
            if len(rec) != 3:
                raise RaggedCsv(f"{path}:{lineno}: expected 3 fields, got {len(rec)}")
            ident, cam, flag = (c.strip() for c in rec)
            if flag not in ("", allowed_flag):
                raise UnknownFlag(f"{path}:{lineno}: unknown flag {flag!r}")
            try:
                out.append((int(ident), int(cam), flag == allowed_flag))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: id and camera must be integers") from None
    return out


def read_query_labels(path: str | Path) -> list[QueryMeta]:
    return [QueryMeta(i, c, f) for i, c, f in _read_label_rows(Path(path), "distractor")]


def read_gallery_labels(path: str | Path) -> list[GalleryMeta]:
    return [GalleryMeta(i, c, f) for i, c, f in _read_label_rows(Path(path), "junk")]


def write_query_labels(queries: Iterable[QueryMeta], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "camera", "flag"])
        for q in queries:
            w.writerow([q.identity, q.camera, "distractor" if q.is_distractor else ""])


def write_gallery_labels(gallery: Iterable[GalleryMeta], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "camera", "flag"])
        for g in gallery:
            w.writerow([g.identity, g.camera, "junk" if g.is_junk else ""])


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


# -- reports -----------------------------------------------------------------

def _curve_to_json(curve: ThresholdCurve | None):
    if curve is None:
        return None
    return {"taus": list(curve.taus), "values": list(curve.values)}


def _curve_from_json(data) -> ThresholdCurve | None:
    return None if data is None else ThresholdCurve(data["taus"], data["values"])


_CURVES = ("mrep_curve", "mrp_curve", "mvp_curve", "mfr_curve")


def report_to_dict(report: EvalReport) -> dict:
    doc = {"schema": REPORT_SCHEMA}
    for key, value in asdict(report).items():
        doc[key] = value
    for key in _CURVES:
        doc[key] = _curve_to_json(getattr(report, key))
    doc["cmc"] = None if report.cmc is None else list(report.cmc)
    doc["roc"] = None if report.roc is None else [asdict(p) for p in report.roc]
    return doc


def report_from_dict(doc: dict) -> EvalReport:
    if doc.get("schema") != REPORT_SCHEMA:
        raise SchemaMismatch(f"unsupported report schema {doc.get('schema')!r}")
    fields = dict(doc)
    fields.pop("schema")
    for key in _CURVES:
        fields[key] = _curve_from_json(fields[key])
    if fields["cmc"] is not None:
        fields["cmc"] = tuple(fields["cmc"])
    if fields["roc"] is not None:
        fields["roc"] = tuple(RocPoint(**p) for p in fields["roc"])
    return EvalReport(**fields)


def dumps_report(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(dumps_report(report))


def read_report(path: str | Path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text()))


def write_per_query(detail: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(detail, allow_nan=False) + "\n")


def _curve_taus(report: EvalReport) -> tuple[float, ...]:
    for key in _CURVES:
        curve = getattr(report, key)
        if curve is not None:
            return curve.taus
    return ()


def write_curves(report: EvalReport, path: str | Path) -> None:
    """CSV with columns tau, mrep, mrp, mvp, mfr; missing curves print NA."""
    taus = _curve_taus(report)
    columns = [getattr(report, key) for key in _CURVES]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "mrep", "mrp", "mvp", "mfr"])
        for i, tau in enumerate(taus):
            cells = [f"{tau:.6f}"]
            cells += ["NA" if c is None else f"{c.values[i]:.6f}" for c in columns]
            w.writerow(cells)


def read_curves(path: str | Path) -> dict[str, list[float | None]]:
    out: dict[str, list[float | None]] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            for key, cell in rec.items():
                out.setdefault(key, []).append(None if cell == "NA" else float(cell))
    return out


def write_svg(report: EvalReport, path: str | Path, title: str = "") -> None:
    """Line plot of the mReP and mFR curves over tau, both axes fixed to [0, 1]."""
    w, h, pad = 480, 360, 50
    pw, ph = w - 2 * pad, h - 2 * pad

    def xy(t: float, v: float) -> str:
        return f"{pad + t * pw:.2f},{pad + (1 - v) * ph:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">',
        f'<rect x="{pad}" y="{pad}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i in range(11):
        f = i / 10
        parts.append(
            f'<line x1="{pad + f * pw:.1f}" y1="{pad + ph}" x2="{pad + f * pw:.1f}" '
            f'y2="{pad + ph + 4}" stroke="black"/>'
            f'<text x="{pad + f * pw:.1f}" y="{pad + ph + 16}" text-anchor="middle">{f:.1f}</text>'
        )
        parts.append(
            f'<line x1="{pad - 4}" y1="{pad + (1 - f) * ph:.1f}" x2="{pad}" '
            f'y2="{pad + (1 - f) * ph:.1f}" stroke="black"/>'
            f'<text x="{pad - 7}" y="{pad + (1 - f) * ph + 4:.1f}" text-anchor="end">{100 * f:.0f}</text>'
        )
    parts.append(f'<text x="{w / 2}" y="{h - 10}" text-anchor="middle">threshold</text>')
    parts.append(
        f'<text x="14" y="{h / 2}" text-anchor="middle" transform="rotate(-90 14 {h / 2})">%</text>'
    )
    if title:
        parts.append(f'<text x="{w / 2}" y="{pad - 20}" text-anchor="middle">{title}</text>')
    legend_y = pad + 14
    for curve, name, color in (
        (report.mrep_curve, "mReP", "#1f77b4"),
        (report.mfr_curve, "mFR", "#d62728"),
    ):
        if curve is None:
            continue
        pts = " ".join(xy(t, min(max(v, 0.0), 1.0)) for t, v in zip(curve.taus, curve.values))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<line x1="{pad + pw - 70}" y1="{legend_y - 4}" x2="{pad + pw - 50}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{pad + pw - 45}" y="{legend_y}">{name}</text>'
        )
        legend_y += 16
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_dataset(dataset, out_dir: str | Path, format: Literal["binary", "csv"] = "binary") -> dict[str, Path]:
    """Write matrix and label files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "distances": out / ("distances.bin" if format == "binary" else "distances.csv"),
        "queries": out / "queries.csv",
        "gallery": out / "gallery.csv",
    }
    if format == "binary":
        write_distance_matrix(dataset.matrix, paths["distances"])
    else:
        write_csv_matrix(dataset.matrix.values, paths["distances"])
    write_query_labels(dataset.queries, paths["queries"])
    write_gallery_labels(dataset.gallery, paths["gallery"])
    return paths
