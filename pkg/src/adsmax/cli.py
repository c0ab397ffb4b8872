"""Command-line driver for family sweeps.

Subcommands run the per-parameter pipeline up to a chosen stage and print a
table; `verify` and `report` run it in full and write files:

    norm      cross-ratio norm estimates only
    width     + boundary curves and width estimates
    surface   + maximal surface solve, curvature and residual checks
    extend    + extension map and dilatation
    verify    full run; emits CSV and JSON, prints inequality flags
    report    full run; emits the format chosen with --format

Exit status: 0 on success, 2 when an inequality flag fails beyond its slack
on an otherwise clean row, 1 on errors (bad config, I/O, or any row whose
pipeline raised).  Per-row failures never abort the sweep; they are recorded
in the row's `error` column and reflected in the exit status.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys

from .errors import AdsmaxError
from .experiment import STAGES, Report, emit, load_config, run_experiment

_STAGE_COLUMNS = {
    "norm": ["param", "norm_lb"],
    "width": ["param", "norm_lb", "width_lb"],
    "surface": [
        "param",
        "norm_lb",
        "width_lb",
        "lambda_sup",
        "res_linear",
        "res_quasilinear",
        "converged",
    ],
    "extend": [
        "param",
        "norm_lb",
        "width_lb",
        "lambda_sup",
        "K_formula_sup",
        "K_measured_sup",
        "converged",
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adsmax",
        description="Run circle-homeomorphism families through the "
        "norm/width/surface/extension pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "norm": "estimate cross-ratio norms for the sweep",
        "width": "estimate norms and convex-core widths",
        "surface": "solve maximal surfaces and run the residual checks",
        "extend": "full pipeline including the extension map",
        "verify": "full pipeline; check inequalities, emit CSV+JSON",
        "report": "full pipeline; emit one report in the chosen format",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="experiment JSON path")
        s.add_argument("--seed", type=int, default=None, help="override config seed")
        s.add_argument("--out", default=None, help="override output directory")
        s.add_argument(
            "--format",
            dest="fmt",
            choices=("csv", "json", "svg"),
            default=None,
            help="report format (default csv; verify always emits csv+json)",
        )
    return parser


def _cell(value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def _print_table(report: Report, columns: list, out) -> None:
    rows = [[_cell(getattr(r, c)) for c in columns] for r in report.rows]
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(columns)]
    out.write("  ".join(c.ljust(widths[i]) for i, c in enumerate(columns)).rstrip() + "\n")
    for row in rows:
        out.write("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)).rstrip() + "\n")


def _row_status(report: Report) -> int:
    """0 clean, 2 flag violation on a clean row, 1 any row error."""
    status = 0
    for row in report.rows:
        if row.error:
            return 1
        flagged = math.isfinite(row.width_lb) and not (row.flag_propC and row.flag_propG)
        if flagged:
            status = 2
    return status


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = int(args.seed)
        if args.out is not None:
            overrides["out_dir"] = args.out
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)

        if args.command in STAGES:
            report = run_experiment(cfg, stage=args.command)
            _print_table(report, _STAGE_COLUMNS[args.command], sys.stdout)
            for row in report.rows:
                if row.error:
                    print(f"row param={row.param:g} failed: {row.error}", file=sys.stderr)
            return 1 if any(r.error for r in report.rows) else 0

        report = run_experiment(cfg)
        if args.command == "report":
            path = emit(report, args.fmt or "csv", cfg.out_dir)
            print(path)
        else:  # verify
            for fmt in ("csv", "json") + (("svg",) if args.fmt == "svg" else ()):
                print(emit(report, fmt, cfg.out_dir))
            _print_table(
                report,
                ["param", "flag_propC", "flag_propG", "slack_propC", "slack_propG"],
                sys.stdout,
            )
            if report.fit is not None:
                f = report.fit
                print(
                    f"C1_hat={_cell(f.C1_hat.value)} "
                    f"C_upper_hat={_cell(f.C_upper_hat.value)} "
                    f"C0_lower_hat={_cell(f.C0_lower_hat.value)}"
                )
        for row in report.rows:
            if row.error:
                print(f"row param={row.param:g} failed: {row.error}", file=sys.stderr)
        return _row_status(report)
    except AdsmaxError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
