"""Evaluation rollouts and benchmark metrics."""

from .evaluate import (
    BenchmarkSummary,
    EvalRecord,
    aggregate,
    generate_group,
    write_records_csv,
    write_summary_csv,
)

__all__ = [
    "BenchmarkSummary",
    "EvalRecord",
    "aggregate",
    "generate_group",
    "write_records_csv",
    "write_summary_csv",
]
