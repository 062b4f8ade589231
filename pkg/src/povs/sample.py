"""Partially overlapping samples: data model, CSV ingestion, summaries.

A partially overlapping sample has ``n_c`` pairs observed in both groups,
plus ``n_a`` observations only in group 1 and ``n_b`` only in group 2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "Diagnostic",
    "InputError",
    "InsufficientDataError",
    "PartiallyOverlappingSample",
    "SampleSummary",
    "DegenerateCorrelationError",
    "ingest_csv",
    "pearson_r",
    "summarize",
    "summarize_arrays",
    "validate",
]


class InputError(ValueError):
    """Malformed input data."""


class InsufficientDataError(InputError):
    """A group has fewer than two observations."""


class DegenerateCorrelationError(ArithmeticError):
    """Pearson r is undefined because a coordinate has zero variance."""


def _frozen(values, shape_tail=()) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape((-1, *shape_tail))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PartiallyOverlappingSample:
    """Paired observations plus observations exclusive to each group.

    ``paired`` has shape ``(n_c, 2)``; column 0 belongs to group 1.
    """

    paired: np.ndarray
    unpaired_a: np.ndarray
    unpaired_b: np.ndarray

    def __init__(self, paired=(), unpaired_a=(), unpaired_b=()):
        object.__setattr__(self, "paired", _frozen(paired, (2,)))
        object.__setattr__(self, "unpaired_a", _frozen(unpaired_a))
        object.__setattr__(self, "unpaired_b", _frozen(unpaired_b))
        for name in ("paired", "unpaired_a", "unpaired_b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"{name} contains non-finite values")

    @property
    def n_a(self) -> int:
        return len(self.unpaired_a)

    @property
    def n_b(self) -> int:
        return len(self.unpaired_b)

    @property
    def n_c(self) -> int:
        return len(self.paired)

    @property
    def n_1(self) -> int:
        return self.n_a + self.n_c

    @property
    def n_2(self) -> int:
        return self.n_b + self.n_c

    @property
    def group1(self) -> np.ndarray:
        return np.concatenate([self.paired[:, 0], self.unpaired_a])

    @property
    def group2(self) -> np.ndarray:
        return np.concatenate([self.paired[:, 1], self.unpaired_b])

    def map(self, func) -> "PartiallyOverlappingSample":
        """Apply an elementwise function to every observation."""
        return PartiallyOverlappingSample(
            func(self.paired), func(self.unpaired_a), func(self.unpaired_b)
        )

    def swapped(self) -> "PartiallyOverlappingSample":
        """The same data with group 1 and group 2 exchanged."""
        return PartiallyOverlappingSample(
            self.paired[:, ::-1], self.unpaired_b, self.unpaired_a
        )

    def __eq__(self, other):
        if not isinstance(other, PartiallyOverlappingSample):
            return NotImplemented
        return (
            np.array_equal(self.paired, other.paired)
            and np.array_equal(self.unpaired_a, other.unpaired_a)
            and np.array_equal(self.unpaired_b, other.unpaired_b)
        )

    def __repr__(self):
        return (
            f"PartiallyOverlappingSample(n_a={self.n_a}, n_b={self.n_b}, "
            f"n_c={self.n_c})"
        )


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics for every test statistic.

    Fields hold floats for a single sample, or equal-shape arrays when a
    batch of samples is summarised at once.
    """

    n_a: int
    n_b: int
    n_c: int
    mean_1: float
    mean_2: float
    var_1: float
    var_2: float
    r: float
    warnings: tuple = field(default=(), compare=False)

    @property
    def n_1(self) -> int:
        return self.n_a + self.n_c

    @property
    def n_2(self) -> int:
        return self.n_b + self.n_c

    @property
    def N(self) -> int:
        return self.n_a + self.n_b + 2 * self.n_c


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "warning" or "fatal"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


def _parse_field(token: str, row: int, column: str):
    token = token.strip()
    if token == "":
        return None
    try:
        value = float(token)
    except ValueError:
        raise InputError(f"row {row}: non-numeric value {token!r} in {column}") from None
    if not math.isfinite(value):
        raise InputError(f"row {row}: non-finite value {token!r} in {column}")
    return value


def ingest_csv(stream: TextIO | str) -> PartiallyOverlappingSample:
    """Read a ``group1,group2`` CSV where an empty field means "not observed".

    Row numbers in error messages count the header as row 1.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip().lstrip("﻿") for h in header[:2]] != ["group1", "group2"]:
        raise InputError("missing header row 'group1,group2'")
    paired, only_a, only_b = [], [], []
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) > 2 and any(tok.strip() for tok in row[2:]):
            raise InputError(f"row {row_number}: expected 2 fields, got {len(row)}")
        row = (row + ["", ""])[:2]
        x1 = _parse_field(row[0], row_number, "group1")
        x2 = _parse_field(row[1], row_number, "group2")
        if x1 is None and x2 is None:
            raise InputError(f"row {row_number}: both fields empty")
        if x1 is not None and x2 is not None:
            paired.append((x1, x2))
        elif x1 is not None:
            only_a.append(x1)
        else:
            only_b.append(x2)
    return PartiallyOverlappingSample(paired, only_a, only_b)


def pearson_r(pairs) -> float:
    """Product-moment correlation of ``(x, y)`` pairs.

    Raises :class:`DegenerateCorrelationError` when either coordinate is
    constant.
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(pairs) < 2:
        raise InputError("pearson_r needs at least two pairs")
    r = _pearson_batch(pairs[:, 0], pairs[:, 1])
    if np.isnan(r):
        raise DegenerateCorrelationError("a paired coordinate has zero variance")
    return float(r)


def _pearson_batch(x, y):
    """Correlation along the last axis; NaN where a coordinate is constant."""
    dx = x - x.mean(axis=-1, keepdims=True)
    dy = y - y.mean(axis=-1, keepdims=True)
    sxx = np.einsum("...i,...i->...", dx, dx)
    syy = np.einsum("...i,...i->...", dy, dy)
    sxy = np.einsum("...i,...i->...", dx, dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = sxy / np.sqrt(sxx * syy)
    r = np.where((sxx > 0) & (syy > 0), r, np.nan)
    return np.clip(r, -1.0, 1.0)


def _mean_var(x):
    n = x.shape[-1]
    mean = x.mean(axis=-1)
    dev = x - mean[..., None]
    var = np.einsum("...i,...i->...", dev, dev) / (n - 1)
    return mean, var


def summarize_arrays(pair1, pair2, only_a, only_b) -> SampleSummary:
    """Summarise a batch of samples; the last axis indexes observations.

    Returns a :class:`SampleSummary` whose float fields are arrays over the
    leading (batch) axes. ``r`` is 0 wherever it is undefined.
    """
    n_c = pair1.shape[-1]
    n_a = only_a.shape[-1]
    n_b = only_b.shape[-1]
    if n_a + n_c < 2 or n_b + n_c < 2:
        raise InsufficientDataError("each group needs at least two observations")
    mean_1, var_1 = _mean_var(np.concatenate([pair1, only_a], axis=-1))
    mean_2, var_2 = _mean_var(np.concatenate([pair2, only_b], axis=-1))
    if n_c >= 2:
        r = np.nan_to_num(_pearson_batch(pair1, pair2), nan=0.0)
    else:
        r = np.zeros_like(mean_1)
    return SampleSummary(n_a, n_b, n_c, mean_1, mean_2, var_1, var_2, r)


def validate(s: PartiallyOverlappingSample) -> list[Diagnostic]:
    """Warnings and fatal problems for ``s``; empty when all is well."""
    out = []
    if s.n_1 < 2:
        out.append(Diagnostic("fatal", "Sample 1 too small"))
    if s.n_2 < 2:
        out.append(Diagnostic("fatal", "Sample 2 too small"))
    if s.n_c == 1:
        out.append(Diagnostic("warning", "r undefined for a single pair, treated as 0"))
    elif s.n_c >= 2:
        if np.ptp(s.paired[:, 0]) == 0 or np.ptp(s.paired[:, 1]) == 0:
            out.append(Diagnostic(
                "warning", "r undefined for a constant paired coordinate, treated as 0"))
    for j, group in ((1, s.group1), (2, s.group2)):
        if len(group) >= 2 and np.ptp(group) == 0:
            out.append(Diagnostic("warning", f"Sample {j} has zero variance"))
    return out


def summarize(s: PartiallyOverlappingSample,
              diagnostics: Iterable[Diagnostic] | None = None) -> SampleSummary:
    """Means, variances (n - 1 denominator) and paired correlation of ``s``."""
    if diagnostics is None:
        diagnostics = validate(s)
    diagnostics = list(diagnostics)
    fatal = [d.message for d in diagnostics if d.level == "fatal"]
    if fatal:
        raise InsufficientDataError("; ".join(fatal))
    batch = summarize_arrays(s.paired[:, 0], s.paired[:, 1], s.unpaired_a, s.unpaired_b)
    return SampleSummary(
        s.n_a, s.n_b, s.n_c,
        float(batch.mean_1), float(batch.mean_2),
        float(batch.var_1), float(batch.var_2), float(batch.r),
        warnings=tuple(d.message for d in diagnostics if d.level == "warning"),
    )
