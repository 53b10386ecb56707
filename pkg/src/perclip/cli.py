"""Command-line interface: optimize, bd, scores, correlate, report.

Exit codes: 0 success, 1 error, 2 completed with flags (an optimizer run
hit its iteration cap). All CSV output uses 6 significant digits so reruns
on identical inputs diff clean.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from .backends import backend_from_config
from .bd import bd_quality, bd_rate, bitrate_savings, default_anchors
from .correlation import fit_logistic5, correlate
from .curves import load_curve_file
from .errors import PerclipError
from .optimizer import OptimizationConfig, optimize_clip, EncodeCache
from .report import CurveSeries, render_rq_svg
from .subjective import (
    MosEntry,
    MosTable,
    bt500_screen,
    build_score_matrix,
    compute_dmos,
    compute_mos,
    read_pairing_csv,
    read_scores_csv,
    recover_mle,
    subject_cohorts,
)


def fmt(value) -> str:
    """Fixed CSV cell formatting: 6 significant digits for floats."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if value == 0.0:
            return "0"
        return f"{value:.6g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _write_manifest(out: Path, command: str, inputs: list[str], outputs: list[Path],
                    started: str, exit_code: int, config: str | None = None) -> None:
    doc = {
        "command": command,
        "inputs": inputs,
        "config": config,
        "outputs": [str(p) for p in outputs],
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "exit_code": exit_code,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def cmd_optimize(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(args.config) as fh:
        cfg = json.load(fh)
    backend = backend_from_config(cfg["backend"])
    opt_cfg = cfg.get("optimizer", {})
    config = OptimizationConfig(
        qps=tuple(opt_cfg.get("qps", (27, 39, 49, 59, 63))),
        bounds=tuple(opt_cfg.get("bounds", (0.2, 4.0))),
        x0=tuple(opt_cfg.get("x0", (1.0, 1.0))),
        ftol=opt_cfg.get("ftol", 1e-6),
        max_iters=opt_cfg.get("max_iters", 20),
        metric_id=opt_cfg.get("metric_id", "ms_ssim"),
    )
    cache = None
    if args.cache:
        cache = EncodeCache()
        if Path(args.cache).exists():
            cache.load(args.cache)
    outputs: list[Path] = []
    any_capped = False
    for clip in args.clips:
        ks, trace = optimize_clip(
            backend, clip, config, proxy=args.proxy, cache=cache
        )
        any_capped = any_capped or trace.hit_iteration_cap
        result_path = out / f"{clip}.result.json"
        with open(result_path, "w") as fh:
            json.dump(
                {
                    "clip": clip,
                    "k1": ks.k1,
                    "k2": ks.k2,
                    "cost_bdrate_pct": trace.best[1],
                    "iterations": trace.iterations,
                    "encodes": trace.encode_count,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
        trace_path = out / f"{clip}.trace.csv"
        _write_csv(
            trace_path,
            ["eval_idx", "k1", "k2", "cost", "cache_hit"],
            [
                [i, e.ks.k1, e.ks.k2, e.cost, e.cache_hit]
                for i, e in enumerate(trace.evaluations)
            ],
        )
        outputs += [result_path, trace_path]
        print(f"{clip}: k1={ks.k1:.6g} k2={ks.k2:.6g} cost={trace.best[1]:.6g}%")
    if args.cache:
        cache.save(args.cache)
    code = 2 if any_capped else 0
    _write_manifest(out, "optimize", list(args.clips), outputs, started, code, args.config)
    return code


def cmd_bd(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ref, ref_meta = load_curve_file(args.ref)
    test, _ = load_curve_file(args.test)
    clip = ref_meta.get("clip") or Path(args.ref).stem
    rate_res = bd_rate(ref, test, clean=args.clean)
    qual_res = bd_quality(ref, test)
    anchors = None
    if args.anchors:
        anchors = [
            (f"q{v}", float(v)) for v in args.anchors.split(",")
        ]
    else:
        anchors = default_anchors(ref) or None
    savings = bitrate_savings(ref, test, anchors=anchors)
    for label in savings.skipped:
        print(f"warning: anchor {label} outside the common quality range", file=sys.stderr)
    header = ["clip", "metric", "bd_rate_pct", "bd_quality", "savings_mean_pct"]
    row: list = [clip, ref.metric_id, rate_res.value, qual_res.value, savings.mean]
    for label, value in savings.per_anchor:
        header.append(f"savings_{label}_pct")
        row.append(value)
    path = out / "bd.csv"
    _write_csv(path, header, [row])
    with open(path) as fh:
        sys.stdout.write(fh.read())
    _write_manifest(out, "bd", [args.ref, args.test], [path], started, 0)
    return 0


def cmd_scores(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dmos_from == "recovered" and not args.recover:
        raise ValueError("--dmos-from recovered requires --recover")
    rows = read_scores_csv(args.scores)
    matrix = build_score_matrix(rows)
    pairing = read_pairing_csv(args.pairing) if args.pairing else None
    outputs: list[Path] = []

    cohorts: dict[str, list[str]] = {"": list(matrix.subjects)}
    if args.cohort:
        by_subject = subject_cohorts(rows, args.cohort)
        for subj, label in by_subject.items():
            cohorts.setdefault(label, []).append(subj)

    if args.screen:
        screening = bt500_screen(matrix)
        path = out / "screening.csv"
        _write_csv(
            path,
            ["subject_id", "p", "q", "n_scored", "outlier_ratio", "asymmetry", "rejected"],
            [
                [s, r.p, r.q, r.n_scored, r.outlier_ratio, r.asymmetry,
                 s in screening.rejected]
                for s, r in screening.per_subject.items()
            ],
        )
        outputs.append(path)
        if screening.rejected:
            print("rejected: " + ",".join(screening.rejected))
            matrix = matrix.subset_subjects(
                [s for s in matrix.subjects if s not in screening.rejected]
            )
        else:
            print("rejected: none")

    for label, subjects in cohorts.items():
        suffix = f".{label}" if label else ""
        sub = matrix if label == "" else matrix.subset_subjects(subjects)
        mos = compute_mos(sub)
        path = out / f"mos{suffix}.csv"
        _write_csv(
            path,
            ["pvs_id", "mos", "ci95", "n"],
            [[pvs, e.mos, e.ci95, e.n] for pvs, e in mos.entries.items()],
        )
        outputs.append(path)

        model = None
        if args.recover:
            model = recover_mle(sub, method=args.recover)
            path = out / f"psi{suffix}.csv"
            _write_csv(
                path,
                ["pvs_id", "psi", "ci95"],
                [
                    [pvs, psi, ci]
                    for pvs, psi, ci in zip(model.stimuli, model.psi, model.ci95)
                ],
            )
            outputs.append(path)
            path = out / f"subjects{suffix}.csv"
            _write_csv(
                path,
                ["subject_id", "delta", "nu"],
                [
                    [s, d, v]
                    for s, d, v in zip(model.subjects, model.delta, model.nu)
                ],
            )
            outputs.append(path)

        if pairing is not None:
            if args.dmos_from == "recovered" and model is not None:
                base = MosTable(entries={
                    pvs: MosEntry(mos=psi, ci95=ci, n=e.n)
                    for (pvs, psi, ci), e in zip(
                        zip(model.stimuli, model.psi, model.ci95),
                        mos.entries.values(),
                    )
                })
            else:
                base = mos
            dmos = compute_dmos(base, pairing)
            path = out / f"dmos{suffix}.csv"
            _write_csv(
                path,
                ["pvs_id", "dmos", "ci95", "n"],
                [[pvs, e.mos, e.ci95, e.n] for pvs, e in dmos.entries.items()],
            )
            outputs.append(path)

    inputs = [args.scores] + ([args.pairing] if args.pairing else [])
    _write_manifest(out, "scores", inputs, outputs, started, 0)
    return 0


def _read_table(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        return list(reader.fieldnames), list(reader)


def cmd_correlate(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m_cols, m_rows = _read_table(args.metrics)
    s_cols, s_rows = _read_table(args.subjective)
    if "pvs_id" not in m_cols or "pvs_id" not in s_cols:
        raise ValueError("both CSVs need a pvs_id column")
    subj_col = next((c for c in ("subjective", "mos", "dmos") if c in s_cols), None)
    if subj_col is None:
        raise ValueError(f"{args.subjective}: no subjective/mos/dmos column")
    subjective = {r["pvs_id"]: float(r[subj_col]) for r in s_rows}
    metric_names = [c for c in m_cols if c != "pvs_id"]
    joined = [r for r in m_rows if r["pvs_id"] in subjective]
    if len(joined) < 3:
        raise ValueError(f"join produced {len(joined)} rows; need >= 3")

    out_rows = []
    for name in metric_names:
        x = [float(r[name]) for r in joined]
        y = [subjective[r["pvs_id"]] for r in joined]
        params = fit_logistic5(x, y) if args.map else None
        rep = correlate(x, y, params=params)
        out_rows.append([name, rep.plcc, rep.srocc, rep.krcc, rep.rmse, rep.n])
    path = out / "correlations.csv"
    _write_csv(path, ["metric", "plcc", "srocc", "krcc", "rmse", "n"], out_rows)
    with open(path) as fh:
        sys.stdout.write(fh.read())
    _write_manifest(out, "correlate", [args.metrics, args.subjective], [path], started, 0)
    return 0


def cmd_report(args) -> int:
    started = _now()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.curves:
        raise ValueError("no curve files given")
    by_clip: dict[str, list[tuple[str, CurveSeries, str]]] = {}
    for path in args.curves:
        curve, meta = load_curve_file(path)
        clip = meta.get("clip") or Path(path).stem.split("__")[0]
        variant = meta.get("variant") or Path(path).stem
        series = CurveSeries(
            label=variant,
            points=tuple(
                (p.rate, p.quality, ci)
                for p, ci in zip(curve.points, meta["ci95"])
            ),
        )
        by_clip.setdefault(clip, []).append((variant, series, curve.metric_id))

    outputs: list[Path] = []
    summary_rows = []
    for clip in sorted(by_clip):
        entries = sorted(by_clip[clip], key=lambda e: e[0])
        svg = render_rq_svg(clip, [s for _, s, _ in entries], metric_id=entries[0][2])
        path = out / f"{clip}.svg"
        path.write_text(svg)
        outputs.append(path)
        for variant, series, metric in entries:
            rates = [p[0] for p in series.points]
            quals = [p[1] for p in series.points]
            summary_rows.append(
                [clip, variant, metric, len(series.points),
                 min(rates), max(rates), min(quals), max(quals)]
            )
    summary = out / "report_summary.csv"
    _write_csv(
        summary,
        ["clip", "variant", "metric", "n_points",
         "rate_min_kbps", "rate_max_kbps", "quality_min", "quality_max"],
        summary_rows,
    )
    outputs.append(summary)
    _write_manifest(out, "report", list(args.curves), outputs, started, 0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perclip",
        description="Per-clip encoder lambda tuning and quality analytics",
    )
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for simulations")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="search lambda multipliers per clip")
    p.add_argument("clips", nargs="+", help="clip names resolvable by the backend")
    p.add_argument("--config", required=True, help="backend + optimizer config JSON")
    p.add_argument("--proxy", default=None, help="settings profile for the search")
    p.add_argument("--cache", default=None, help="persistent encode cache path")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bd", help="delta metrics between two curve files")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("--clean", action=argparse.BooleanOptionalAction, default=True,
                   help="drop non-monotone points before the rate delta")
    p.add_argument("--anchors", default=None,
                   help="comma-separated anchor qualities for bitrate savings")
    p.set_defaults(func=cmd_bd)

    p = sub.add_parser("scores", help="MOS/DMOS tables from raw opinion scores")
    p.add_argument("scores", help="CSV of subject_id,pvs_id,score")
    p.add_argument("--pairing", default=None, help="CSV of dist_pvs_id,src_pvs_id")
    p.add_argument("--screen", action="store_true", help="run observer screening")
    p.add_argument("--recover", choices=("p910", "p913"), default=None,
                   help="recover per-subject bias and inconsistency")
    p.add_argument("--cohort", default=None,
                   help="scores column to split subjects into cohorts")
    p.add_argument("--dmos-from", choices=("mos", "recovered"), default="mos")
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("correlate", help="objective-vs-subjective correlations")
    p.add_argument("metrics", help="CSV of pvs_id plus one column per metric")
    p.add_argument("subjective", help="CSV of pvs_id,subjective")
    p.add_argument("--map", action=argparse.BooleanOptionalAction, default=True,
                   help="fit the monotone logistic mapping before PLCC/RMSE")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="SVG rate-quality charts with error bars")
    p.add_argument("curves", nargs="*", help="curve JSON files (clip/variant tagged)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (PerclipError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
