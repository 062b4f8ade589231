"""Partially overlapping samples t-tests and their rank / normal-score variants.

Each statistic interpolates between a paired and an independent-samples test:

* ``NEW1``: equal-variance form (pooled variance), df from counts only.
* ``NEW2``: Welch-type form, df built from the Welch effective df.
* ``RNK1``/``RNK2``: the same formulas on pooled midranks.
* ``INT1``/``INT2``: the same formulas on Van der Waerden scores.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .sample import (
    PartiallyOverlappingSample,
    SampleSummary,
    summarize,
    summarize_arrays,
    validate,
)
from .special import t_p_two_sided
from .transforms import _vdw_from_ranks, midranks, pool_split, pooled_ranks, vdw_scores

__all__ = [
    "DegenerateStatisticError",
    "Method",
    "TestResult",
    "batch_tests",
    "df_v1",
    "df_v2",
    "run_test",
    "t_new1",
    "t_new2",
]

# Squared denominators at or below this are treated as zero.
DENOM_FLOOR = 1e-300


class DegenerateStatisticError(ArithmeticError):
    """The statistic or its df is undefined for these data."""


class Method(str, enum.Enum):
    NEW1 = "NEW1"
    NEW2 = "NEW2"
    RNK1 = "RNK1"
    RNK2 = "RNK2"
    INT1 = "INT1"
    INT2 = "INT2"

    @property
    def welch(self) -> bool:
        return self.value.endswith("2")

    @property
    def family(self) -> str:
        return self.value[:3]

    @classmethod
    def parse(cls, name: str) -> "Method":
        if isinstance(name, cls):
            return name
        try:
            return cls(name.upper())
        except ValueError:
            raise ValueError(f"unknown method {name!r}") from None


ALL_METHODS = tuple(Method)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this

    method: Method
    statistic: float
    df: float
    p_value: float
    reject: bool
    alpha: float
    warnings: tuple = field(default=())


# -- array cores: NaN marks a degenerate replicate ---------------------------

def _ratio(diff, scale, denom2):
    """diff / sqrt(denom2) with the degenerate-denominator policy.

    An exactly zero mean difference with a positive scale gives 0 even when
    the correlation term cancels the denominator.
    """
    diff, scale, denom2 = np.broadcast_arrays(diff, scale, denom2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = diff / np.sqrt(denom2)
    t = np.where((scale > 0) & (denom2 > DENOM_FLOOR), t, np.nan)
    return np.where((diff == 0) & (scale > 0), 0.0, t)


def _t_new1(s: SampleSummary):
    n1, n2 = s.n_1, s.n_2
    sp2 = ((n1 - 1) * s.var_1 + (n2 - 1) * s.var_2) / (n1 + n2 - 2)
    bracket = 1.0 / n1 + 1.0 / n2 - 2.0 * s.r * s.n_c / (n1 * n2)
    return _ratio(s.mean_1 - s.mean_2, sp2, sp2 * bracket)


def _t_new2(s: SampleSummary):
    n1, n2 = s.n_1, s.n_2
    se1, se2 = s.var_1 / n1, s.var_2 / n2
    cross = 2.0 * s.r * np.sqrt(s.var_1 * s.var_2) * s.n_c / (n1 * n2)
    return _ratio(s.mean_1 - s.mean_2, se1 + se2, se1 + se2 - cross)


def _df_v1(n_a, n_b, n_c):
    m = n_a + n_b
    return (n_c - 1) + (m + n_c - 1) / (m + 2 * n_c) * m


def _df_v2(s: SampleSummary):
    n1, n2 = s.n_1, s.n_2
    se1, se2 = s.var_1 / n1, s.var_2 / n2
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (se1 + se2) ** 2 / (se1**2 / (n1 - 1) + se2**2 / (n2 - 1))
    m = s.n_a + s.n_b
    if m == 0:
        # Second term vanishes identically, whatever gamma is.
        v2 = np.full_like(np.asarray(gamma, dtype=float), float(s.n_c - 1))
    else:
        v2 = (s.n_c - 1) + (gamma - s.n_c + 1) / (m + 2 * s.n_c) * m
    return np.where((se1 + se2 > 0) & (v2 > 0), v2, np.nan)


# -- public scalar API --------------------------------------------------------

def _checked(value, what):
    if np.isnan(value):
        raise DegenerateStatisticError(f"{what} is undefined for these data")
    return float(value)


def t_new1(summary: SampleSummary) -> float:
    """Equal-variance partially overlapping samples statistic."""
    return _checked(_t_new1(summary), "T_new1 (zero pooled variance or denominator)")


def t_new2(summary: SampleSummary) -> float:
    """Unequal-variance partially overlapping samples statistic."""
    return _checked(_t_new2(summary), "T_new2 (zero variance or denominator)")


def df_v1(n_a: int, n_b: int, n_c: int) -> float:
    """Degrees of freedom for the equal-variance statistic (counts only)."""
    v = _df_v1(n_a, n_b, n_c)
    if not v > 0:
        raise DegenerateStatisticError(f"nonpositive df v1 = {v}")
    return float(v)


def df_v2(summary: SampleSummary) -> float:
    """Degrees of freedom for the unequal-variance statistic."""
    if not summary.var_1 / summary.n_1 + summary.var_2 / summary.n_2 > 0:
        raise DegenerateStatisticError("both samples have zero variance")
    return _checked(_df_v2(summary), "df v2 (nonpositive)")


def _summary_for(s: PartiallyOverlappingSample, method: Method, c: float, diagnostics):
    if method.family == "NEW":
        return summarize(s, diagnostics)
    if method.family == "RNK":
        t = pooled_ranks(s)
    else:
        t = vdw_scores(s, c)
    summary = summarize(t, validate(t))
    warnings = tuple(dict.fromkeys(
        [d.message for d in diagnostics if d.level == "warning"] + list(summary.warnings)
    ))
    if t.tie_count:
        warnings += (f"{t.tie_count} tied observations given midranks",)
    return SampleSummary(
        summary.n_a, summary.n_b, summary.n_c, summary.mean_1, summary.mean_2,
        summary.var_1, summary.var_2, summary.r, warnings=warnings,
    )


def run_test(s: PartiallyOverlappingSample, method: Method | str = Method.NEW1,
             alpha: float = 0.05, c: float = 0.0) -> TestResult:
    """Run one of the six tests on ``s`` (two-sided).

    ``c`` is the rank offset used by the INT methods (0 = Van der Waerden).
    Raises :class:`~povs.sample.InsufficientDataError` for too-small groups
    and :class:`DegenerateStatisticError` when no statistic can be formed.
    """
    method = Method.parse(method) if isinstance(method, str) else method
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    summary = _summary_for(s, method, c, validate(s))
    try:
        if method.welch:
            stat, df = t_new2(summary), df_v2(summary)
        else:
            stat, df = t_new1(summary), df_v1(summary.n_a, summary.n_b, summary.n_c)
    except DegenerateStatisticError as exc:
        raise DegenerateStatisticError(f"{method.value}: {exc}") from None
    p = t_p_two_sided(stat, df)
    return TestResult(method, stat, df, p, bool(p < alpha), alpha, summary.warnings)


# -- batch API used by the simulation engine ----------------------------------

def batch_tests(pair1, pair2, only_a, only_b, methods=ALL_METHODS,
                alpha: float = 0.05, c: float = 0.0):
    """Run ``methods`` on a batch of equally-shaped samples.

    Arrays have shape ``(R, n)``. Returns ``{method: (reject, degenerate)}``
    with boolean arrays of length ``R``; degenerate replicates never reject.
    """
    summaries = {}
    families = {m.family for m in methods}
    if "NEW" in families:
        summaries["NEW"] = summarize_arrays(pair1, pair2, only_a, only_b)
    if families & {"RNK", "INT"}:
        n_total = pair1.shape[-1] * 2 + only_a.shape[-1] + only_b.shape[-1]
        r1, r2, ra, rb, _ = pool_split(pair1, pair2, only_a, only_b, midranks)
        if "RNK" in families:
            summaries["RNK"] = summarize_arrays(r1, r2, ra, rb)
        if "INT" in families:
            z = [_vdw_from_ranks(v, n_total, c) for v in (r1, r2, ra, rb)]
            summaries["INT"] = summarize_arrays(*z)
    out = {}
    for m in methods:
        s = summaries[m.family]
        if m.welch:
            stat, df = _t_new2(s), _df_v2(s)
        else:
            stat = _t_new1(s)
            df = np.full_like(stat, _df_v1(s.n_a, s.n_b, s.n_c))
        bad = np.isnan(stat) | np.isnan(df)
        reject = np.zeros(stat.shape, dtype=bool)
        ok = ~bad
        if ok.any():
            reject[ok] = t_p_two_sided(stat[ok], df[ok]) < alpha
        out[m] = (reject, bad)
    return out
