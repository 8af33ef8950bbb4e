"""Train, evaluate, analyse and compare experiments on disk.

Every artifact is a pure function of (config, seed): random streams are
derived by name from the seed, and CSV floats are written with repr.
"""

import copy
import itertools
import json
import logging
import math
import os
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ..adapters import trainable_fraction
from ..config import ARTIFACT_FILES
from ..errors import ArchitectureMismatchError, ConfigError, LabError, NumericalError
from ..policy import PolicyNet
from ..rlvr import StepReport, delta_norms, make_optimizer, train_step
from ..rollout import BenchmarkSummary, EvalRecord, aggregate, generate_group
from ..rollout import write_records_csv as write_eval_records
from ..rollout import write_summary_csv as write_eval_summary
from ..spectra import LayerSpectrum, spectra_report, write_spectra_csv
from ..spectra import write_summary_csv as write_spectra_summary
from ..tasks import HeldOutSplit
from ..tensor import Rng
from ..utilities import write_csv, write_json
from .checkpoint import load_checkpoint, save_checkpoint
from .experiment_config import ExperimentConfig, config_from_dict
from .network import build_network

logger = logging.getLogger(__name__)

METRICS_HEADER = (
    "step",
    "mean_reward",
    "loss",
    "grad_norm",
    "groups_kept",
    "skipped",
    "trainable_fraction",
)
FRONTIER_HEADER = (
    "name",
    "kind",
    "rank",
    "variant",
    "trainable_fraction",
    "mean_avg_at_k",
    "pass_rate",
    "status",
)


@dataclass(frozen=True)
class TrainResult:
    run_dir: Path
    reports: list[StepReport]
    trainable_fraction: float

    @property
    def final_checkpoint(self) -> Path:
        return self.run_dir / ARTIFACT_FILES["CHECKPOINT_FINAL"]


@dataclass(frozen=True)
class FrontierRow:
    name: str
    kind: str
    rank: int
    variant: str
    trainable_fraction: float
    mean_avg_at_k: float
    pass_rate: float
    status: str = "ok"
    exit_code: int = 0

    def csv_row(self) -> tuple[str, str, int, str, float, float, float, str]:
        return (
            self.name,
            self.kind,
            self.rank,
            self.variant,
            self.trainable_fraction,
            self.mean_avg_at_k,
            self.pass_rate,
            self.status,
        )


def _metrics_row(
    report: StepReport, fraction: float, layers: Sequence[str]
) -> tuple[int | float | bool, ...]:
    return (
        report.step,
        report.mean_reward,
        report.loss,
        report.grad_norm,
        report.groups_kept,
        report.skipped,
        fraction,
        *(report.delta_norms[name] for name in layers),
    )


def run_train(config: ExperimentConfig) -> TrainResult:
    """Train ``config`` and write its run directory.

    The metrics rows gathered so far are written even when a step aborts on
    a non-finite value; the error is re-raised afterwards.
    """
    run_dir = config.run_dir
    write_json(run_dir / ARTIFACT_FILES["CONFIG"], config.to_dict())

    net = build_network(config)
    save_checkpoint(net, config, run_dir / ARTIFACT_FILES["CHECKPOINT_INITIAL"])

    rng = Rng(config.seed)
    held_out = held_out_split(config)
    task_rng = rng.substream("tasks")
    train_rng = rng.substream("train")
    params = config.surrogate()
    settings = config.train_settings()
    optimizer = make_optimizer(net, config.train.learning_rate, config.adapter)
    fraction = trainable_fraction(net)
    layers = list(delta_norms(net))
    header = (*METRICS_HEADER, *(f"delta_fro:{name}" for name in layers))

    reports: list[StepReport] = []
    try:
        for step in range(config.train.steps):
            prompts = [
                held_out.train_instance(task_rng.substream(f"step-{step}", b))
                for b in range(config.train.batch_size)
            ]
            report = train_step(
                net,
                prompts,
                params,
                settings,
                train_rng.substream("step", step),
                optimizer,
                step,
            )
            reports.append(report)
            last = step + 1 == config.train.steps
            if (step + 1) % config.train.log_every == 0 or last:
                logger.info(
                    "%s step %d/%d: reward %.3f, loss %.4f, grad norm %.3g",
                    config.name,
                    step + 1,
                    config.train.steps,
                    report.mean_reward,
                    report.loss,
                    report.grad_norm,
                )
    except NumericalError:
        logger.error("%s: numerical failure after %d steps", config.name, len(reports))
        raise
    finally:
        write_csv(
            run_dir / ARTIFACT_FILES["METRICS"],
            header,
            [_metrics_row(r, fraction, layers) for r in reports],
        )

    save_checkpoint(net, config, run_dir / ARTIFACT_FILES["CHECKPOINT_FINAL"])
    return TrainResult(run_dir=run_dir, reports=reports, trainable_fraction=fraction)


def _check_compatible(config: ExperimentConfig, echoed: ExperimentConfig) -> None:
    if config.policy != echoed.policy or config.adapter != echoed.adapter:
        raise ArchitectureMismatchError(
            f"config {config.name} describes {config.adapter.kind} on {config.policy}, "
            f"checkpoint holds {echoed.adapter.kind} on {echoed.policy}"
        )


def held_out_split(config: ExperimentConfig) -> HeldOutSplit:
    """The eval prompts of ``config``; training never draws one of them."""
    return HeldOutSplit.draw(
        config.task.task,
        config.task.difficulty,
        config.evaluation.instances,
        Rng(config.seed).substream("eval-instances"),
    )


def evaluate(net: PolicyNet, config: ExperimentConfig) -> list[EvalRecord]:
    """Sample ``evaluation.k`` completions for each held-out instance."""
    sample_rng = Rng(config.seed).substream("eval")
    settings = config.evaluation
    records = []
    for i, instance in enumerate(held_out_split(config).eval_instances()):
        records.append(
            generate_group(
                net,
                instance,
                settings.k,
                sample_rng.substream("instance", i),
                settings.temperature,
                settings.top_p,
                instance_id=i,
                max_new=config.train.max_new,
            )
        )
    return records


def run_eval(
    checkpoint: Path | str,
    config: ExperimentConfig | None = None,
    out_dir: Path | str | None = None,
) -> BenchmarkSummary:
    """Evaluate a checkpoint; the checkpoint's own config echo is the default."""
    net, echoed = load_checkpoint(checkpoint)
    if config is None:
        config = echoed
    else:
        _check_compatible(config, echoed)
    records = evaluate(net, config)
    summary = aggregate(records)

    target = Path(out_dir) if out_dir is not None else Path(checkpoint).parent
    write_eval_records(target / ARTIFACT_FILES["EVAL_RECORDS"], records)
    write_eval_summary(target / ARTIFACT_FILES["EVAL_SUMMARY"], summary)
    logger.info(
        "%s: avg@%d %.2f%%, pass@1-in-%d %.2f%% over %d instances",
        config.name,
        config.evaluation.k,
        summary.mean_avg_at_k,
        config.evaluation.k,
        summary.pass_rate,
        summary.records,
    )
    return summary


def run_spectra(
    before: Path | str,
    after: Path | str,
    out_dir: Path | str | None = None,
    r: int | None = None,
) -> list[LayerSpectrum]:
    """Profile the update between two checkpoints.

    ``r`` for the principal-mass summary defaults to the adapter rank.
    """
    net_before, _ = load_checkpoint(before)
    net_after, config = load_checkpoint(after)
    report = spectra_report(net_before, net_after)

    target = Path(out_dir) if out_dir is not None else Path(after).parent
    write_spectra_csv(target / ARTIFACT_FILES["SPECTRA"], report)
    write_spectra_summary(
        target / ARTIFACT_FILES["SPECTRA_SUMMARY"],
        report,
        r if r is not None else config.adapter.rank,
    )
    return report


def run_member(config: ExperimentConfig) -> FrontierRow:
    """Train then evaluate one experiment; failures become a status row."""
    row = {
        "name": config.name,
        "kind": str(config.adapter.kind),
        "rank": config.adapter.rank,
        "variant": str(config.rlvr.variant),
    }
    try:
        result = run_train(config)
        summary = run_eval(result.final_checkpoint, config)
    except Exception as e:
        logger.error("%s failed: %s", config.name, e)
        return FrontierRow(
            **row,
            trainable_fraction=math.nan,
            mean_avg_at_k=math.nan,
            pass_rate=math.nan,
            status=f"failed ({type(e).__name__}): {e}",
            exit_code=e.exit_code if isinstance(e, LabError) else 1,
        )
    return FrontierRow(
        **row,
        trainable_fraction=result.trainable_fraction,
        mean_avg_at_k=summary.mean_avg_at_k,
        pass_rate=summary.pass_rate,
    )


def _frontier_order(row: FrontierRow) -> tuple[bool, float, str]:
    failed = math.isnan(row.trainable_fraction)
    return (failed, 0.0 if failed else -row.trainable_fraction, row.name)


def run_compare(
    configs: Sequence[ExperimentConfig], out_dir: Path | str, jobs: int = 1
) -> list[FrontierRow]:
    """Run each config under ``out_dir`` and write the frontier CSV.

    Rows are ordered by trainable fraction, largest first, with failed
    members last.
    """
    if not configs:
        raise ConfigError("compare: at least one config is required")
    names = [c.name for c in configs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError(f"compare: duplicate run names {', '.join(duplicates)}")
    if jobs < 1:
        raise ConfigError(f"compare: jobs must be >= 1, got {jobs}")

    out_dir = Path(out_dir)
    members = [replace(c, output_dir=str(out_dir)) for c in configs]
    if jobs == 1:
        rows = [run_member(c) for c in members]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_member, members))

    rows.sort(key=_frontier_order)
    write_csv(
        out_dir / ARTIFACT_FILES["FRONTIER"],
        FRONTIER_HEADER,
        [r.csv_row() for r in rows],
    )
    failed = [r.name for r in rows if r.exit_code != 0]
    if failed:
        logger.error(
            "compare: %d of %d members failed: %s",
            len(failed),
            len(rows),
            ", ".join(failed),
        )
    return rows


def parse_axis(axis: str) -> tuple[str, list[Any]]:
    """``adapter.rank=1,8`` -> ("adapter.rank", [1, 8]).

    Values parse as JSON, falling back to plain strings.
    """
    key, sep, raw = axis.partition("=")
    if not sep or not key or not raw:
        raise ConfigError(f"sweep axis {axis!r}: expected key=value[,value...]")
    values: list[Any] = []
    for token in raw.split(","):
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    return key, values


def _set_path(data: dict[str, Any], key: str, value: Any) -> None:
    *sections, leaf = key.split(".")
    node = data
    for section in sections:
        child = node.setdefault(section, {})
        if not isinstance(child, dict):
            raise ConfigError(f"sweep axis {key}: {section} is not a section")
        node = child
    node[leaf] = value


def expand_sweep(base: Mapping[str, Any], axes: Sequence[str]) -> list[dict[str, Any]]:
    """Cartesian product of ``axes`` over the raw ``base`` config.

    Each member is named ``<base name>-<leaf><value>...``.
    """
    parsed = [parse_axis(a) for a in axes]
    keys = [k for k, _ in parsed]
    if len(set(keys)) != len(keys):
        raise ConfigError("sweep: an axis is given more than once")
    base_name = str(base.get("name", "sweep"))
    members = []
    for combo in itertools.product(*(values for _, values in parsed)):
        data = copy.deepcopy(dict(base))
        suffix = []
        for key, value in zip(keys, combo, strict=True):
            _set_path(data, key, value)
            suffix.append(f"{key.rsplit('.', 1)[-1]}{value}")
        data["name"] = "-".join([base_name, *suffix]).replace("/", "_")
        members.append(data)
    return members


def sweep_configs(
    base: Mapping[str, Any],
    axes: Sequence[str],
    environ: Mapping[str, str] | None = None,
) -> list[ExperimentConfig]:
    return [
        config_from_dict(data, os.environ if environ is None else environ)
        for data in expand_sweep(base, axes)
    ]
