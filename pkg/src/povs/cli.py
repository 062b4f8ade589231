"""``povs`` command line: test data, run campaigns, summarise results."""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__
from .report import (
    ResultsSchemaError,
    format_test_results,
    power_table,
    read_results_csv,
    render,
    report_json,
    robustness_table,
    write_results_csv,
    write_text,
)
from .sample import InputError, ingest_csv
from .simulation import ConfigError, DesignMismatchError, load_config, run_campaign
from .stats import ALL_METHODS, DegenerateStatisticError, Method, run_test

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

RESULTS_FILE = "results.csv"
REPORT_FILE = "report.json"

log = logging.getLogger("povs")


def _fail(message: str, code: int) -> int:
    print(f"povs: error: {message}", file=sys.stderr)
    return code


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("povs").joinpath("configs", path.name)
    if bundled.is_file():
        return Path(str(bundled))
    return path


def cmd_test(args) -> int:
    try:
        with open(args.input, newline="", encoding="utf-8") as fh:
            sample = ingest_csv(fh)
    except OSError as exc:
        return _fail(f"cannot read {args.input}: {exc.strerror}", EXIT_INPUT)
    except InputError as exc:
        return _fail(f"{args.input}: {exc}", EXIT_INPUT)

    methods = ALL_METHODS if args.method == "all" else (Method.parse(args.method),)
    results, failures = [], []
    for m in methods:
        try:
            results.append(run_test(sample, m, alpha=args.alpha))
        except DegenerateStatisticError as exc:
            failures.append(str(exc))
        except InputError as exc:
            return _fail(f"{args.input}: {exc}", EXIT_INPUT)

    if args.format == "json":
        doc = [
            {"method": r.method.value, "statistic": r.statistic, "df": r.df,
             "p_value": r.p_value, "reject": r.reject, "alpha": r.alpha,
             "warnings": list(r.warnings)}
            for r in results
        ]
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    elif args.format == "csv":
        sys.stdout.write(render(*format_test_results(results), fmt="csv"))
    else:
        for r in results:
            decision = "reject H0" if r.reject else "do not reject H0"
            print(f"{r.method.value}: t = {r.statistic:.6f}, df = {r.df:.4f}, "
                  f"p = {r.p_value:.6g} ({decision} at alpha = {r.alpha:g})")
            for w in r.warnings:
                print(f"  warning: {w}")
    for message in failures:
        print(f"povs: degenerate statistic: {message}", file=sys.stderr)
    return EXIT_DEGENERATE if failures else EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(_resolve_config(args.config))
    except ConfigError as exc:
        return _fail(str(exc), EXIT_INPUT)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(f"cannot create {out_dir}: {exc.strerror}", EXIT_INPUT)
    results_path = out_dir / RESULTS_FILE
    report_path = out_dir / REPORT_FILE

    def progress(done, total):
        log.info("cell %d/%d", done, total)

    started = time.perf_counter()
    try:
        report = run_campaign(cfg, workers=args.threads, progress=progress)
        buf = io.StringIO()
        write_results_csv(report.rows(), buf)
        write_text(results_path, buf.getvalue())
        write_text(report_path, report_json(report))
    except BaseException:
        for path in (results_path, report_path):
            path.unlink(missing_ok=True)
        raise
    elapsed = time.perf_counter() - started
    n_cells = len(report.cells)
    print(f"{n_cells} cells x {cfg.replicates} replicates x {len(cfg.methods)} methods "
          f"in {elapsed:.1f} s -> {results_path}")
    for flag in report.flags:
        print(f"warning: {flag}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        h0 = read_results_csv(args.h0)
        h1 = read_results_csv(args.h1) if args.h1 else None
        if args.style == "power":
            if h1 is None:
                return _fail("--style power needs --h1", EXIT_INPUT)
            header, rows = power_table(h1, h0)
        else:
            header, rows = robustness_table(h0, h1)
    except (ResultsSchemaError, DesignMismatchError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    sys.stdout.write(render(header, rows, fmt=args.format))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povs",
        description="Tests for partially overlapping samples and their simulation study.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run tests on a group1,group2 CSV file")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--method", default="all",
                   choices=[m.value.lower() for m in Method] + ["all"])
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run a simulation campaign from a JSON config")
    p.add_argument("--config", required=True, metavar="FILE",
                   help="config path, or the name of a bundled config (e.g. h0_desk.json)")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--threads", type=int, default=1, metavar="N",
                   help="worker processes; does not change results")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarise simulate results")
    p.add_argument("--h0", required=True, metavar="FILE")
    p.add_argument("--h1", metavar="FILE")
    p.add_argument("--style", choices=("robustness", "power"), required=True)
    p.add_argument("--format", choices=("csv", "text"), default="text")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "alpha", 0.5) is not None and not 0.0 < getattr(args, "alpha", 0.5) < 1.0:
        return _fail("--alpha must lie in (0, 1)", EXIT_INPUT)
    if getattr(args, "threads", 1) < 1:
        return _fail("--threads must be at least 1", EXIT_INPUT)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
