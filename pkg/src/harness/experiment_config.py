"""Experiment configuration: a tree of frozen dataclasses loaded from strict JSON.

Unknown keys, wrong types and out-of-range values raise ConfigError naming
the dotted field path. ``SEED`` and ``OUT_DIR`` in the environment override
the file.
"""

import logging
import os
import types
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Union, get_args, get_origin, get_type_hints

from ..adapters import AdaLoRASchedule, AdapterConfig
from ..config import (
    DEFAULT_SEED,
    DEFAULT_STD_FLOOR,
    ENV_OVERRIDES,
    EVAL_TEMPERATURE,
    EVAL_TOP_P,
    OUTPUT_DIR,
)
from ..errors import ConfigError
from ..policy import PolicyConfig
from ..rlvr import SurrogateParams, TrainSettings, Variant, WarmStartSettings
from ..tasks import TaskId, max_difficulty, prompt_length, required_vocab, value_token
from ..utilities import read_json_file

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskSpec:
    task: TaskId = TaskId.MOD_ADD
    difficulty: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.difficulty <= max_difficulty(self.task):
            raise ConfigError(
                f"task.difficulty: {self.task} supports "
                f"1..{max_difficulty(self.task)}, got {self.difficulty}"
            )


@dataclass(frozen=True)
class RlvrSpec:
    """Objective variant; unset clip bounds take the variant defaults."""

    variant: Variant = Variant.GRPO
    eps_low: float | None = None
    eps_high: float | None = None
    std_floor: float = DEFAULT_STD_FLOOR


@dataclass(frozen=True)
class TrainSpec:
    steps: int = 200
    batch_size: int = 8
    group_size: int = 8
    learning_rate: float = 2e-3
    max_new: int = 4
    temperature: float = 1.0
    top_p: float = 1.0
    max_grad_norm: float = 1.0
    log_every: int = 10

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ConfigError(f"train.steps: must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ConfigError(f"train.batch_size: must be >= 1, got {self.batch_size}")
        if self.log_every < 1:
            raise ConfigError(f"train.log_every: must be >= 1, got {self.log_every}")


@dataclass(frozen=True)
class AdaLoRASpec:
    target_rank: int = 1
    init_warmup: int = 0
    final_warmup: int = 0


@dataclass(frozen=True)
class EvalSpec:
    instances: int = 32
    k: int = 4
    temperature: float = EVAL_TEMPERATURE
    top_p: float = EVAL_TOP_P

    def __post_init__(self) -> None:
        if self.instances < 1 or self.k < 1:
            raise ConfigError("evaluation.instances/k: must be >= 1")
        if self.temperature < 0 or not 0 < self.top_p <= 1:
            raise ConfigError(
                "evaluation.temperature/top_p: need temperature >= 0, 0 < top_p <= 1"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    adapter: AdapterConfig
    name: str = "run"
    seed: int = DEFAULT_SEED
    output_dir: str = OUTPUT_DIR
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    rlvr: RlvrSpec = field(default_factory=RlvrSpec)
    task: TaskSpec = field(default_factory=TaskSpec)
    train: TrainSpec = field(default_factory=TrainSpec)
    adalora: AdaLoRASpec = field(default_factory=AdaLoRASpec)
    warmstart: WarmStartSettings = field(default_factory=WarmStartSettings)
    evaluation: EvalSpec = field(default_factory=EvalSpec)

    def __post_init__(self) -> None:
        if not self.name or "/" in self.name or self.name.startswith("."):
            raise ConfigError(
                f"name: must be a plain directory name, got {self.name!r}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must fit in 64 unsigned bits, got {self.seed}")

        p, t = self.policy, self.task
        needed = required_vocab(t.task, t.difficulty)
        if p.vocab < needed:
            raise ConfigError(
                f"policy.vocab: {t.task} difficulty {t.difficulty} needs {needed}"
            )
        span = self.warmstart.answer_span
        if span is not None and value_token(span - 1) >= p.vocab:
            raise ConfigError(
                f"warmstart.answer_span: {span} values overflow vocab {p.vocab}"
            )
        plen = prompt_length(t.task, t.difficulty)
        if plen > p.max_seq // 2:
            raise ConfigError(
                f"policy.max_seq: prompts of length {plen} exceed max_seq/2"
            )
        if plen + self.train.max_new > p.max_seq:
            raise ConfigError(
                f"train.max_new: prompt {plen} + {self.train.max_new} "
                f"exceeds max_seq {p.max_seq}"
            )
        for shape in ((p.d_model, p.d_model), (p.d_ff, p.d_model), (p.d_model, p.d_ff)):
            self.adapter.validate_for(*shape)
        if self.adalora.target_rank > self.adapter.rank:
            raise ConfigError(
                f"adalora.target_rank: {self.adalora.target_rank} exceeds adapter.rank "
                f"{self.adapter.rank}"
            )
        # Constructing these validates the cross-section combinations
        self.surrogate()
        self.train_settings()

    def surrogate(self) -> SurrogateParams:
        defaults = SurrogateParams.for_variant(self.rlvr.variant)
        eps_low, eps_high = self.rlvr.eps_low, self.rlvr.eps_high
        return SurrogateParams(
            variant=self.rlvr.variant,
            eps_low=defaults.eps_low if eps_low is None else eps_low,
            eps_high=defaults.eps_high if eps_high is None else eps_high,
            std_floor=self.rlvr.std_floor,
            max_completion_len=self.train.max_new,
        )

    def train_settings(self) -> TrainSettings:
        schedule = None
        if self.train.steps > 0:
            schedule = AdaLoRASchedule(
                total_steps=self.train.steps,
                init_warmup=self.adalora.init_warmup,
                final_warmup=self.adalora.final_warmup,
            )
        return TrainSettings(
            group_size=self.train.group_size,
            learning_rate=self.train.learning_rate,
            max_new=self.train.max_new,
            temperature=self.train.temperature,
            top_p=self.train.top_p,
            max_grad_norm=self.train.max_grad_norm,
            adalora_target_rank=self.adalora.target_rank,
            adalora_schedule=schedule,
        )

    @property
    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.name

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def echo_dict(self) -> dict[str, Any]:
        """``to_dict`` minus ``output_dir``: the config a checkpoint echoes."""
        data = self.to_dict()
        del data["output_dir"]
        return data


SECTIONS: dict[str, type] = {
    "policy": PolicyConfig,
    "adapter": AdapterConfig,
    "rlvr": RlvrSpec,
    "task": TaskSpec,
    "train": TrainSpec,
    "adalora": AdaLoRASpec,
    "warmstart": WarmStartSettings,
    "evaluation": EvalSpec,
}
SCALARS: dict[str, type] = {"name": str, "seed": int, "output_dir": str}


def _coerce(value: Any, hint: Any, path: str) -> Any:
    origin = get_origin(hint)
    if origin in (Union, types.UnionType):
        if value is None:
            if type(None) in get_args(hint):
                return None
            raise ConfigError(f"{path}: must not be null")
        inner = [a for a in get_args(hint) if a is not type(None)]
        return _coerce(value, inner[0], path)
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError:
            choices = ", ".join(str(m.value) for m in hint)
            raise ConfigError(f"{path}: {value!r} is not one of {choices}") from None
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type {hint!r}")


def _section(cls: type, data: Any, path: str) -> Any:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown field")
    kwargs = {
        key: _coerce(value, hints[key], f"{path}.{key}") for key, value in data.items()
    }
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{path}: {e}") from e


def config_from_dict(
    data: Mapping[str, Any], environ: Mapping[str, str] | None = None
) -> ExperimentConfig:
    """Build and validate a config; ``environ`` overrides apply last."""
    unknown = sorted(set(data) - set(SECTIONS) - set(SCALARS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    if "adapter" not in data:
        raise ConfigError("adapter: required section missing")

    kwargs: dict[str, Any] = {}
    for key, cls in SECTIONS.items():
        if key in data:
            kwargs[key] = _section(cls, data[key], key)
    for key, hint in SCALARS.items():
        if key in data:
            kwargs[key] = _coerce(data[key], hint, key)

    for env_name, key in ENV_OVERRIDES.items():
        raw = (environ or {}).get(env_name)
        if raw is None or raw == "":
            continue
        if SCALARS[key] is int:
            try:
                kwargs[key] = int(raw)
            except ValueError:
                raise ConfigError(
                    f"{key}: environment {env_name}={raw!r} is not an integer"
                ) from None
        else:
            kwargs[key] = raw
        logger.info("Config override from environment: %s=%s", env_name, raw)

    return ExperimentConfig(**kwargs)


def load_config(
    path: Path | str, environ: Mapping[str, str] | None = None
) -> ExperimentConfig:
    """Load ``path``; the run name defaults to the file stem."""
    path = Path(path)
    data = read_json_file(path)
    data.setdefault("name", path.stem)
    return config_from_dict(data, os.environ if environ is None else environ)


def load_configs_dir(
    directory: Path | str, environ: Mapping[str, str] | None = None
) -> list[ExperimentConfig]:
    directory = Path(directory)
    paths = sorted(directory.glob("*.json"))
    if not paths:
        raise ConfigError(f"{directory}: no *.json configs found")
    return [load_config(p, environ) for p in paths]
