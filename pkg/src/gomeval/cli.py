"""Command line entry point: ``gomeval {evaluate,compare,synth,table2}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
import warnings
from pathlib import Path

from . import io, pipeline, synth
from .model import EvalConfig, EvalReport, GomError, validate_dataset

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

COMPARE_KEYS = {
    "map": ("map", False),
    "mrep_max": ("mrep_max", False),
    "MREP": ("MREP", False),
    "MFR": ("MFR", True),  # lower is better
}


def _pct(x: float | None) -> str:
    return "NA" if x is None else f"{100 * x:.2f}"


def _tau(x: float | None) -> str:
    return "NA" if x is None else f"{x:.2f}"


def summary_table(report: EvalReport) -> str:
    head = ["CMC@1", "mAP", "mINP", "mVP_max", "mReP_max@tau_max", "MREP", "MFR", "tau_nz"]
    rep_max = "NA"
    if report.mrep_max is not None:
        rep_max = f"{_pct(report.mrep_max)}@{_tau(report.tau_max)}"
    cells = [
        _pct(report.cmc1),
        _pct(report.map),
        _pct(report.minp),
        _pct(report.mvp_max),
        rep_max,
        _pct(report.MREP),
        _pct(report.MFR),
        _tau(report.tau_nz),
    ]
    widths = [max(len(h), len(c)) for h, c in zip(head, cells)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(head, widths)),
        "  ".join(c.rjust(w) for c, w in zip(cells, widths)),
        f"(values in %; {report.n_positive} positive / {report.n_distractor} distractor queries)",
    ]
    return "\n".join(lines)


def cmd_evaluate(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    config = EvalConfig(
        grid_step=args.grid_step,
        B=args.B,
        normalization="none" if args.no_normalize else "global_minmax",
        cross_camera_filter=not args.no_cross_camera_filter,
        exact_sweep=args.exact_sweep,
        max_cmc_rank=args.max_cmc_rank,
        rp_denominator=args.rp_denominator,
        roc_rank=args.roc_rank,
        threads=args.threads,
    )
    matrix = io.read_distance_matrix(args.distances, args.format)
    queries = io.read_query_labels(args.query_labels)
    gallery = io.read_gallery_labels(args.gallery_labels)
    dataset = validate_dataset(
        matrix,
        queries,
        gallery,
        cross_camera_filter=config.cross_camera_filter,
        lenient=args.lenient,
    )
    for note in dataset.warnings:
        print(f"warning: {note}", file=sys.stderr)

    result = pipeline.run(dataset, config)
    provenance = {
        "distances": io.file_digest(args.distances),
        "query_labels": io.file_digest(args.query_labels),
        "gallery_labels": io.file_digest(args.gallery_labels),
    }
    report = dataclasses.replace(result.report, provenance=provenance)

    if args.out:
        io.write_report(report, args.out)
    if args.curves:
        io.write_curves(report, args.curves)
    if args.svg:
        io.write_svg(report, args.svg, title=Path(args.distances).stem)
    if args.per_query:
        io.write_per_query(result.per_query(), args.per_query)
    print(summary_table(report))
    print(f"evaluated in {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return EXIT_OK


def _sort_value(report: EvalReport, attr: str, ascending: bool) -> tuple[int, float]:
    v = getattr(report, attr)
    if v is None:
        return (1, 0.0)
    return (0, v if ascending else -v)


def cmd_compare(args: argparse.Namespace) -> int:
    if len(args.reports) < 2:
        print("compare needs at least two report files", file=sys.stderr)
        return EXIT_USAGE
    reports = [(Path(p).stem, io.read_report(p)) for p in args.reports]
    attr, ascending = COMPARE_KEYS[args.key]
    ranked = sorted(reports, key=lambda nr: _sort_value(nr[1], attr, ascending))

    head = ["method", "CMC@1", "mAP", "mVP_max", "mReP_max", "tau_max", "MREP", "MFR"]
    rows = [
        [
            name,
            _pct(r.cmc1),
            _pct(r.map),
            _pct(r.mvp_max),
            _pct(r.mrep_max),
            _tau(r.tau_max),
            _pct(r.MREP),
            _pct(r.MFR),
        ]
        for name, r in ranked
    ]
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    print("  ".join(h.ljust(w) for h, w in zip(head, widths)))
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    print()
    for key, (a, asc) in COMPARE_KEYS.items():
        scored = [(n, r) for n, r in reports if getattr(r, a) is not None]
        if not scored:
            continue
        best = sorted(scored, key=lambda nr: _sort_value(nr[1], a, asc))[0]
        arrow = "lower is better" if asc else "higher is better"
        print(f"best {key} ({arrow}): {best[0]} ({_pct(getattr(best[1], a))})")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.profile).read_text()) if args.profile else {}
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read profile: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.seed is not None and isinstance(data, dict):
            data = {**data, "seed": args.seed}
        profile = synth.ErrorProfile.from_dict(data)
    except synth.InvalidProfile as exc:
        print(f"InvalidProfile: {exc}", file=sys.stderr)
        return EXIT_USAGE
    dataset = synth.generate(profile)
    paths = io.write_dataset(dataset, args.out_dir, args.format)
    Path(args.out_dir, "profile.json").write_text(
        json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_table2(args: argparse.Namespace) -> int:
    fx = synth.table2_fixture()
    paths = io.write_dataset(fx.dataset, args.out_dir)
    expected = {
        "tau_1": fx.tau_1,
        "tau_2": fx.tau_2,
        "B": fx.config.B,
        "lists": list(fx.lists),
        "per_list": fx.expected,
        "far": fx.expected_far,
    }
    Path(args.out_dir, "expected.json").write_text(json.dumps(expected, indent=2) + "\n")
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    print(f"evaluate with --B {fx.config.B}; thresholds {fx.tau_1} and {fx.tau_2}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gomeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="evaluate one distance matrix")
    ev.add_argument("--distances", required=True)
    ev.add_argument("--format", choices=["binary", "csv"], default="binary")
    ev.add_argument("--query-labels", required=True)
    ev.add_argument("--gallery-labels", required=True)
    ev.add_argument("--out", help="report JSON path")
    ev.add_argument("--curves", help="curve CSV path")
    ev.add_argument("--svg", help="curve plot path")
    ev.add_argument("--per-query", help="per-query score JSON path")
    ev.add_argument("--grid-step", type=float, default=0.01)
    ev.add_argument("--B", type=int, default=3000)
    ev.add_argument("--no-cross-camera-filter", action="store_true")
    ev.add_argument("--no-normalize", action="store_true")
    ev.add_argument("--exact-sweep", action="store_true")
    ev.add_argument("--rp-denominator", choices=["returned", "total"], default="returned")
    ev.add_argument("--max-cmc-rank", type=int, default=50)
    ev.add_argument("--roc-rank", type=int, default=1)
    ev.add_argument("--threads", type=int, default=0, help="worker threads, 0 = one per CPU")
    ev.add_argument("--lenient", action="store_true", help="reclassify contradictory queries")
    ev.set_defaults(func=cmd_evaluate)

    cmp_ = sub.add_parser("compare", help="rank methods from report files")
    cmp_.add_argument("reports", nargs="+")
    cmp_.add_argument("--key", choices=list(COMPARE_KEYS), default="MREP")
    cmp_.set_defaults(func=cmd_compare)

    sy = sub.add_parser("synth", help="write a seeded synthetic dataset")
    sy.add_argument("--profile", help="ErrorProfile JSON file")
    sy.add_argument("--seed", type=int)
    sy.add_argument("--out-dir", required=True)
    sy.add_argument("--format", choices=["binary", "csv"], default="binary")
    sy.set_defaults(func=cmd_synth)

    t2 = sub.add_parser("table2", help="write the six-list toy dataset")
    t2.add_argument("--out-dir", required=True)
    t2.set_defaults(func=cmd_table2)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except (GomError, OSError) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_ERROR


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
