"""Reading and writing campaign outputs, and rendering aggregate tables."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Sequence, TextIO

from .rng import Distribution
from .simulation import (
    GAP,
    CampaignReport,
    ResultRow,
    aggregate_power,
    robustness_summary,
)
from .stats import Method, TestResult

__all__ = [
    "RESULTS_COLUMNS",
    "ResultsSchemaError",
    "power_table",
    "read_results_csv",
    "render",
    "report_json",
    "robustness_table",
    "format_test_results",
    "write_results_csv",
]

RESULTS_COLUMNS = (
    "n_a", "n_b", "n_c", "rho", "dist", "delta", "method",
    "replicates", "rejections", "errors", "nhrr", "classification",
)
TEST_COLUMNS = ("method", "statistic", "df", "p_value", "reject", "alpha", "warnings")
GAP_MARKER = "-"


class ResultsSchemaError(ValueError):
    """A results file does not have the expected columns or values."""


def _num(x: float) -> str:
    return repr(float(x))


def write_results_csv(rows: Sequence[ResultRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESULTS_COLUMNS)
    for r in rows:
        writer.writerow([
            r.n_a, r.n_b, r.n_c, _num(r.rho), r.dist.value, _num(r.delta), r.method.value,
            r.replicates, r.rejections, r.errors, _num(r.nhrr), r.classification,
        ])


def read_results_csv(path) -> list[ResultRow]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != RESULTS_COLUMNS:
                raise ResultsSchemaError(
                    f"{path}: expected columns {','.join(RESULTS_COLUMNS)}")
            rows = []
            for line, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                try:
                    rows.append(ResultRow(
                        int(rec[0]), int(rec[1]), int(rec[2]), float(rec[3]),
                        Distribution.parse(rec[4]), float(rec[5]), Method.parse(rec[6]),
                        int(rec[7]), int(rec[8]), int(rec[9]),
                    ))
                except (ValueError, IndexError) as exc:
                    raise ResultsSchemaError(f"{path}: row {line}: {exc}") from None
    except OSError as exc:
        raise ResultsSchemaError(f"cannot read {path}: {exc}") from None
    return rows


def report_json(report: CampaignReport) -> str:
    """Full campaign as one JSON document, config embedded for provenance."""
    cells = []
    for c in report.cells:
        p = c.params
        results = {}
        for m, t in c.tallies.items():
            rate = t.nhrr(c.replicates_run)
            results[m.value] = {
                "rejections": t.rejections,
                "errors": t.errors,
                "nhrr": None if math.isnan(rate) else rate,
                "classification": ResultRow(
                    p.n_a, p.n_b, p.n_c, p.rho, p.dist, p.delta, m,
                    c.replicates_run, t.rejections, t.errors).classification,
            }
        cells.append({
            "cell_index": c.cell_index, "n_a": p.n_a, "n_b": p.n_b, "n_c": p.n_c,
            "rho": p.rho, "dist": p.dist.value, "delta": p.delta,
            "replicates": c.replicates_run, "results": results,
        })
    robustness = [
        {**e, "method": e["method"].value, "dist": e["dist"].value}
        for e in robustness_summary(report.rows())
    ]
    doc = {
        "config": report.config.to_dict(),
        "cells": cells,
        "robustness": robustness,
        "flags": report.flags,
    }
    return json.dumps(doc, indent=2) + "\n"


def _fmt(value, digits=4) -> str:
    if value is GAP:
        return GAP_MARKER
    return f"{value:.{digits}f}"


def power_table(h1_rows, h0_rows) -> tuple[list[str], list[list[str]]]:
    """Header and rows of the power table, per-cell and whole-group variants."""
    table = aggregate_power(h1_rows, h0_rows)
    methods = list(table[0]["per_cell"]) if table else []
    header = ["dist", "sizes", "rho", "cells"]
    header += [m.value for m in methods]
    header += [f"{m.value}_whole_group" for m in methods]
    rows = []
    for e in table:
        rows.append(
            [e["dist"].value, e["sizes"], e["rho"], str(e["cells"])]
            + [_fmt(e["per_cell"][m]) for m in methods]
            + [_fmt(e["whole_group"][m]) for m in methods]
        )
    return header, rows


def robustness_table(h0_rows, h1_rows=None) -> tuple[list[str], list[list[str]]]:
    """Header and rows: robust/liberal/conservative counts per method and dist."""
    entries = robustness_summary(h0_rows, h1_rows)
    header = ["method", "dist", "cells", "robust", "liberal", "conservative", "undefined"]
    if h1_rows is not None:
        header.append("mean_power_robust")
    rows = []
    for e in entries:
        row = [e["method"].value, e["dist"].value] + [
            str(e[k]) for k in ("cells", "robust", "liberal", "conservative", "undefined")]
        if h1_rows is not None:
            row.append(_fmt(e["mean_power_robust"]))
        rows.append(row)
    return header, rows


def format_test_results(results: Sequence[TestResult]) -> tuple[list[str], list[list[str]]]:
    rows = [
        [r.method.value, _num(r.statistic), _num(r.df), _num(r.p_value),
         "true" if r.reject else "false", _num(r.alpha), "; ".join(r.warnings)]
        for r in results
    ]
    return list(TEST_COLUMNS), rows


def render(header, rows, fmt: str = "csv") -> str:
    """CSV, or whitespace-aligned text columns."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(line, widths)).rstrip()
             for line in [header, *rows]]
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")
