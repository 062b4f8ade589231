"""Two-sample tests for partially overlapping samples.

Six statistics (parametric, pooled-rank and Van der Waerden variants) plus
the Monte Carlo engine used to study their Type I error and power.
"""

from .sample import PartiallyOverlappingSample, SampleSummary, ingest_csv, summarize, validate
from .stats import Method, TestResult, df_v1, df_v2, run_test, t_new1, t_new2
from .transforms import pooled_ranks, vdw_scores

__version__ = "0.1.0"

__all__ = [
    "Method",
    "PartiallyOverlappingSample",
    "SampleSummary",
    "TestResult",
    "df_v1",
    "df_v2",
    "ingest_csv",
    "pooled_ranks",
    "run_test",
    "summarize",
    "t_new1",
    "t_new2",
    "validate",
    "vdw_scores",
]
