"""Factorial Monte Carlo campaigns: rejection rates, robustness, power tables."""

from __future__ import annotations

import dataclasses
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import CellParams, Distribution, gen_cell_arrays
from .stats import ALL_METHODS, Method, batch_tests

__all__ = [
    "CampaignConfig",
    "CampaignReport",
    "CellResult",
    "ConfigError",
    "DesignMismatchError",
    "GAP",
    "MethodTally",
    "ResultRow",
    "RobustnessBand",
    "aggregate_power",
    "classify_robustness",
    "enumerate_design",
    "load_config",
    "robustness_summary",
    "run_campaign",
    "run_cell",
]

log = logging.getLogger(__name__)

DEFAULT_SIZES = (5, 10, 30, 50, 100, 500)
DEFAULT_RHOS = (-0.75, -0.50, -0.25, 0.0, 0.25, 0.50, 0.75)
# Observations held in memory per chunk of replicates.
_CHUNK_VALUES = 400_000
GAP = None


class ConfigError(ValueError):
    """Invalid campaign configuration."""


class DesignMismatchError(ValueError):
    """Two result sets do not cover the same design."""


@dataclass(frozen=True)
class CampaignConfig:
    """Everything that determines a campaign's output."""

    n_a: tuple = DEFAULT_SIZES
    n_b: tuple = DEFAULT_SIZES
    n_c: tuple = DEFAULT_SIZES
    rho: tuple = DEFAULT_RHOS
    distributions: tuple = (Distribution.NORMAL,)
    delta: float = 0.0
    replicates: int = 10_000
    alpha: float = 0.05
    master_seed: int = 20170601
    methods: tuple = ALL_METHODS
    int_offset: float = 0.0

    def __post_init__(self):
        for name in ("n_a", "n_b", "n_c", "rho", "distributions", "methods"):
            value = getattr(self, name)
            if isinstance(value, (str, bytes)) or not isinstance(value, Iterable):
                raise ConfigError(f"{name} must be a list")
            value = tuple(value)
            if not value:
                raise ConfigError(f"grid {name!r} is empty")
            object.__setattr__(self, name, value)
        for name in ("n_a", "n_b", "n_c"):
            grid = getattr(self, name)
            if any(not isinstance(v, int) or isinstance(v, bool) or v < 0 for v in grid):
                raise ConfigError(f"grid {name!r} must hold non-negative integers")
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        if any(not -1.0 <= r <= 1.0 for r in self.rho):
            raise ConfigError("rho values must lie in [-1, 1]")
        try:
            dists = tuple(Distribution.parse(d) for d in self.distributions)
            methods = tuple(m if isinstance(m, Method) else Method.parse(m) for m in self.methods)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "distributions", dists)
        object.__setattr__(self, "methods", methods)
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise ConfigError("replicates must be a positive integer")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        if not 0.0 <= self.int_offset < 1.0:
            raise ConfigError("int_offset must lie in [0, 1)")
        if not math.isfinite(self.delta):
            raise ConfigError("delta must be finite")
        for n_a, n_b, n_c in itertools.product(self.n_a, self.n_b, self.n_c):
            if n_a + n_c < 2 or n_b + n_c < 2:
                raise ConfigError(
                    f"cell n_a={n_a}, n_b={n_b}, n_c={n_c} leaves a group with < 2 observations")

    def to_dict(self) -> dict:
        return {
            "n_a": list(self.n_a),
            "n_b": list(self.n_b),
            "n_c": list(self.n_c),
            "rho": list(self.rho),
            "distributions": [d.value for d in self.distributions],
            "delta": self.delta,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "methods": [m.value for m in self.methods],
            "int_offset": self.int_offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_(self, **changes) -> "CampaignConfig":
        return dataclasses.replace(self, **changes)


def load_config(path) -> CampaignConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return CampaignConfig.from_dict(data)


def enumerate_design(cfg: CampaignConfig) -> list[tuple[int, CellParams]]:
    """All design cells as ``(cell_index, params)``.

    Distributions form the outer loop; within each, cells run over n_a, then
    n_b, then n_c, then rho (last varies fastest), and ``cell_index`` is the
    position in that sweep. Every distribution reuses the same indices, so
    the same replicate sees the same underlying normals in each.
    """
    cells = []
    for dist in cfg.distributions:
        grid = itertools.product(cfg.n_a, cfg.n_b, cfg.n_c, cfg.rho)
        for index, (n_a, n_b, n_c, rho) in enumerate(grid):
            cells.append((index, CellParams(n_a, n_b, n_c, rho, dist, cfg.delta)))
    return cells


@dataclass(frozen=True)
class RobustnessBand:
    lower: float = 0.025
    upper: float = 0.075


def classify_robustness(nhrr: float, band: RobustnessBand = RobustnessBand()) -> str:
    """``'robust'`` inside the closed band, else ``'liberal'``/``'conservative'``."""
    if not 0.0 <= nhrr <= 1.0:
        raise ValueError(f"rejection rate {nhrr!r} outside [0, 1]")
    if nhrr > band.upper:
        return "liberal"
    if nhrr < band.lower:
        return "conservative"
    return "robust"


@dataclass(frozen=True)
class MethodTally:
    rejections: int
    errors: int

    def nhrr(self, replicates: int) -> float:
        valid = replicates - self.errors
        return self.rejections / valid if valid > 0 else math.nan


@dataclass(frozen=True)
class CellResult:
    params: CellParams
    cell_index: int
    replicates_run: int
    tallies: dict = field(default_factory=dict)

    def nhrr(self, method: Method) -> float:
        return self.tallies[method].nhrr(self.replicates_run)

    @property
    def flagged(self) -> list:
        """Methods for which every replicate was degenerate."""
        return [m for m, t in self.tallies.items() if t.errors == self.replicates_run]


def run_cell(p: CellParams, cfg: CampaignConfig, cell_index: int = 0) -> CellResult:
    """Simulate ``cfg.replicates`` samples for one cell and tally decisions.

    Degenerate replicates are counted as errors and excluded from the
    rejection-rate denominator.
    """
    per_rep = 2 * p.n_c + p.n_a + p.n_b
    chunk = max(1, min(cfg.replicates, _CHUNK_VALUES // max(per_rep, 1)))
    rejections = dict.fromkeys(cfg.methods, 0)
    errors = dict.fromkeys(cfg.methods, 0)
    for start in range(0, cfg.replicates, chunk):
        reps = range(start, min(start + chunk, cfg.replicates))
        arrays = gen_cell_arrays(p, cfg.master_seed, cell_index, reps)
        outcome = batch_tests(*arrays, methods=cfg.methods, alpha=cfg.alpha, c=cfg.int_offset)
        for m, (reject, bad) in outcome.items():
            rejections[m] += int(reject.sum())
            errors[m] += int(bad.sum())
    tallies = {m: MethodTally(rejections[m], errors[m]) for m in cfg.methods}
    result = CellResult(p, cell_index, cfg.replicates, tallies)
    if result.flagged:
        log.warning("cell %d (%s): all replicates degenerate for %s", cell_index, p,
                    ", ".join(m.value for m in result.flagged))
    return result


def _run_cell_job(job):
    index, params, cfg = job
    return run_cell(params, cfg, index)


@dataclass(frozen=True)
class CampaignReport:
    config: CampaignConfig
    cells: list

    def rows(self) -> list["ResultRow"]:
        return rows_from_cells(self.cells, self.config.methods)

    @property
    def flags(self) -> list[str]:
        return [
            f"cell {c.cell_index} {c.params.dist.value}: all replicates degenerate for {m.value}"
            for c in self.cells for m in c.flagged
        ]


def run_campaign(cfg: CampaignConfig, workers: int = 1, progress=None) -> CampaignReport:
    """Run every design cell; output depends only on ``cfg``.

    ``workers > 1`` spreads cells over processes; results come back in
    design order either way.
    """
    jobs = [(index, params, cfg) for index, params in enumerate_design(cfg)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = []
            for result in pool.map(_run_cell_job, jobs, chunksize=1):
                cells.append(result)
                if progress:
                    progress(len(cells), len(jobs))
    else:
        cells = []
        for job in jobs:
            cells.append(_run_cell_job(job))
            if progress:
                progress(len(cells), len(jobs))
    return CampaignReport(cfg, cells)


# -- flat rows: the common currency of files and aggregates -------------------

@dataclass(frozen=True)
class ResultRow:
    n_a: int
    n_b: int
    n_c: int
    rho: float
    dist: Distribution
    delta: float
    method: Method
    replicates: int
    rejections: int
    errors: int

    @property
    def nhrr(self) -> float:
        valid = self.replicates - self.errors
        return self.rejections / valid if valid > 0 else math.nan

    @property
    def classification(self) -> str:
        rate = self.nhrr
        return "undefined" if math.isnan(rate) else classify_robustness(rate)

    @property
    def design_key(self) -> tuple:
        return (self.n_a, self.n_b, self.n_c, self.rho, self.dist, self.method)


def rows_from_cells(cells: Sequence[CellResult], methods: Sequence[Method]) -> list[ResultRow]:
    rows = []
    for cell in cells:
        p = cell.params
        for m in methods:
            t = cell.tallies[m]
            rows.append(ResultRow(p.n_a, p.n_b, p.n_c, p.rho, p.dist, p.delta, m,
                                  cell.replicates_run, t.rejections, t.errors))
    return rows


def _ordered(values):
    return list(dict.fromkeys(values))


def robustness_summary(h0_rows: Sequence[ResultRow], h1_rows: Sequence[ResultRow] | None = None):
    """Counts of robust/liberal/conservative cells per method and distribution.

    With ``h1_rows`` each entry also carries the mean H1 rejection rate over
    the cells that were robust under H0.
    """
    h1 = _index_h1(h0_rows, h1_rows) if h1_rows is not None else None
    table = []
    for method in _ordered(r.method for r in h0_rows):
        for dist in _ordered(r.dist for r in h0_rows):
            group = [r for r in h0_rows if r.method == method and r.dist == dist]
            if not group:
                continue
            counts = {k: 0 for k in ("robust", "liberal", "conservative", "undefined")}
            for r in group:
                counts[r.classification] += 1
            entry = {"method": method, "dist": dist, "cells": len(group), **counts}
            if h1 is not None:
                powers = [h1[r.design_key].nhrr for r in group if r.classification == "robust"]
                entry["mean_power_robust"] = float(np.mean(powers)) if powers else GAP
            table.append(entry)
    return table


def _index_h1(h0_rows, h1_rows):
    h0_keys = [r.design_key for r in h0_rows]
    h1_index = {r.design_key: r for r in h1_rows}
    if len(h1_index) != len(h1_rows) or len(set(h0_keys)) != len(h0_keys):
        raise DesignMismatchError("duplicate design cells in results")
    if set(h0_keys) != set(h1_index):
        raise DesignMismatchError("H0 and H1 results cover different designs")
    return h1_index


SIZE_GROUPS = ("n_a = n_b", "n_a != n_b")
RHO_GROUPS = (">0", "0", "<0")


def _rho_group(rho: float) -> str:
    return ">0" if rho > 0 else ("<0" if rho < 0 else "0")


def aggregate_power(h1_rows: Sequence[ResultRow], h0_rows: Sequence[ResultRow]):
    """Mean power by distribution, equal/unequal n_a and n_b, and sign of rho.

    Averages weight cells equally over every ``(n_a, n_b, n_c)`` in the
    group. For each method two variants are produced:

    * ``per_cell``: average over cells whose H0 rate is robust; a gap only
      when no cell in the group qualifies.
    * ``whole_group``: a gap as soon as any cell in the group is not robust.

    Returns a list of dicts with keys ``dist``, ``sizes``, ``rho``,
    ``cells``, ``per_cell`` and ``whole_group`` (dicts by method; gaps are
    ``None``).
    """
    h1 = _index_h1(h0_rows, h1_rows)
    methods = _ordered(r.method for r in h0_rows)
    table = []
    for dist in _ordered(r.dist for r in h0_rows):
        for sizes in SIZE_GROUPS:
            for rho_group in RHO_GROUPS:
                def in_group(r):
                    return (r.dist == dist and (r.n_a == r.n_b) == (sizes == SIZE_GROUPS[0])
                            and _rho_group(r.rho) == rho_group)

                per_cell, whole = {}, {}
                n_cells = 0
                for m in methods:
                    group = [r for r in h0_rows if r.method == m and in_group(r)]
                    n_cells = max(n_cells, len(group))
                    robust = [r for r in group if r.classification == "robust"]
                    powers = [h1[r.design_key].nhrr for r in robust]
                    per_cell[m] = float(np.mean(powers)) if powers else GAP
                    whole[m] = (float(np.mean(powers))
                                if group and len(robust) == len(group) else GAP)
                if n_cells:
                    table.append({"dist": dist, "sizes": sizes, "rho": rho_group,
                                  "cells": n_cells, "per_cell": per_cell,
                                  "whole_group": whole})
    return table
