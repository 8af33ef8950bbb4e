"""Evaluation-side sampling and the Avg@k / Pass@1-in-k metrics."""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import EVAL_TEMPERATURE, EVAL_TOP_P
from ..errors import ContractError
from ..policy import PolicyNet, sample_completions
from ..tasks import TaskInstance, verify
from ..tensor import Rng
from ..utilities import write_csv

RECORD_HEADER = ("instance_id", "k", "rewards", "avg_at_k", "passed")
SUMMARY_HEADER = ("records", "mean_avg_at_k", "pass_rate")


@dataclass(frozen=True)
class EvalRecord:
    instance_id: int
    k: int
    rewards: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.k < 1 or len(self.rewards) != self.k:
            raise ContractError(
                f"eval record {self.instance_id}: k={self.k} but "
                f"{len(self.rewards)} rewards"
            )

    @property
    def avg_at_k(self) -> float:
        return sum(self.rewards) / self.k

    @property
    def passed(self) -> bool:
        return any(r == 1 for r in self.rewards)

    def csv_row(self) -> tuple[int, int, str, float, bool]:
        return (
            self.instance_id,
            self.k,
            ";".join(str(r) for r in self.rewards),
            self.avg_at_k,
            self.passed,
        )


@dataclass(frozen=True)
class BenchmarkSummary:
    """Means over records, in percent."""

    records: int
    mean_avg_at_k: float
    pass_rate: float


def generate_group(
    net: PolicyNet,
    instance: TaskInstance,
    k: int,
    rng: Rng,
    temperature: float = EVAL_TEMPERATURE,
    top_p: float = EVAL_TOP_P,
    instance_id: int = 0,
    max_new: int = 8,
) -> EvalRecord:
    """k independent verified samples for one instance."""
    if k < 1:
        raise ContractError(f"generate_group: k must be >= 1, got {k}")
    rngs = [rng.substream("sample", i) for i in range(k)]
    samples = sample_completions(
        net, instance.prompt, rngs, temperature, top_p, max_new
    )
    return EvalRecord(
        instance_id, k, tuple(verify(s.tokens, instance) for s in samples)
    )


def aggregate(records: Sequence[EvalRecord]) -> BenchmarkSummary:
    if not records:
        raise ContractError("aggregate: no evaluation records")
    return BenchmarkSummary(
        records=len(records),
        mean_avg_at_k=100.0 * float(np.mean([r.avg_at_k for r in records])),
        pass_rate=100.0 * float(np.mean([r.passed for r in records])),
    )


def write_records_csv(path: Path, records: Sequence[EvalRecord]) -> None:
    write_csv(path, RECORD_HEADER, [r.csv_row() for r in records])


def write_summary_csv(path: Path, summary: BenchmarkSummary) -> None:
    write_csv(
        path,
        SUMMARY_HEADER,
        [(summary.records, summary.mean_avg_at_k, summary.pass_rate)],
    )
