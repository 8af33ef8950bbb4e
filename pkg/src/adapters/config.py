"""Adapter kinds and their configuration."""

import math
from dataclasses import dataclass
from enum import StrEnum

from ..config import (
    DEFAULT_ALPHA_PER_RANK,
    DEFAULT_DROPOUT,
    DEFAULT_LORA_PLUS_RATIO,
    DEFAULT_RANK,
)
from ..errors import ConfigError


class AdapterKind(StrEnum):
    FULL = "Full"
    LORA = "LoRA"
    DORA = "DoRA"
    ADALORA = "AdaLoRA"
    MISS = "MiSS"
    PISSA = "PiSSA"
    MILORA = "MiLoRA"
    LORA_PLUS = "LoRAPlus"
    RSLORA = "RsLoRA"
    LORA_FA = "LoRAFA"
    VERA = "VeRA"
    IA3 = "IA3"
    LN_TUNING = "LNTuning"


# Kinds whose inner dimension is the configured rank
RANKED_KINDS: frozenset[AdapterKind] = frozenset(
    {
        AdapterKind.LORA,
        AdapterKind.DORA,
        AdapterKind.ADALORA,
        AdapterKind.PISSA,
        AdapterKind.MILORA,
        AdapterKind.LORA_PLUS,
        AdapterKind.RSLORA,
        AdapterKind.LORA_FA,
        AdapterKind.VERA,
    }
)

# Kinds without a weight-space delta
VECTOR_KINDS: frozenset[AdapterKind] = frozenset(
    {AdapterKind.IA3, AdapterKind.LN_TUNING}
)


@dataclass(frozen=True)
class AdapterConfig:
    """Hyperparameters of one adapter attachment.

    ``alpha`` defaults to ``DEFAULT_ALPHA_PER_RANK * rank`` (64 at rank 32),
    ``miss_group`` to ``rank`` and ``init_sigma`` to ``1/sqrt(d_in)``.
    """

    kind: AdapterKind
    rank: int = DEFAULT_RANK
    alpha: float | None = None
    dropout: float = DEFAULT_DROPOUT
    lora_plus_lambda: float = DEFAULT_LORA_PLUS_RATIO
    miss_group: int | None = None
    init_sigma: float | None = None
    adalora_orth_reg: float = 0.1

    def __post_init__(self) -> None:
        if not isinstance(self.kind, AdapterKind):
            try:
                object.__setattr__(self, "kind", AdapterKind(self.kind))
            except ValueError as e:
                raise ConfigError(f"adapter.kind: unknown kind {self.kind!r}") from e
        if self.rank < 1:
            raise ConfigError(f"adapter.rank: must be >= 1, got {self.rank}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(
                f"adapter.dropout: must lie in [0, 1), got {self.dropout}"
            )
        if self.lora_plus_lambda < 1.0:
            raise ConfigError(
                f"adapter.lora_plus_lambda: must be >= 1, got {self.lora_plus_lambda}"
            )
        if self.miss_group is not None and self.miss_group < 1:
            raise ConfigError(
                f"adapter.miss_group: must be >= 1, got {self.miss_group}"
            )
        if self.init_sigma is not None and self.init_sigma <= 0:
            raise ConfigError(
                f"adapter.init_sigma: must be positive, got {self.init_sigma}"
            )
        if self.adalora_orth_reg < 0:
            raise ConfigError(
                f"adapter.adalora_orth_reg: must be >= 0, got {self.adalora_orth_reg}"
            )

    @property
    def effective_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return DEFAULT_ALPHA_PER_RANK * self.rank

    @property
    def group(self) -> int:
        return self.miss_group if self.miss_group is not None else self.rank

    @property
    def scale(self) -> float:
        """Multiplier applied to the low-rank product BA."""
        match self.kind:
            case (
                AdapterKind.LORA
                | AdapterKind.LORA_PLUS
                | AdapterKind.LORA_FA
                | AdapterKind.DORA
            ):
                return self.effective_alpha / self.rank
            case AdapterKind.RSLORA:
                return self.effective_alpha / math.sqrt(self.rank)
            case _:
                return 1.0

    def sigma_for(self, d_in: int) -> float:
        return self.init_sigma if self.init_sigma is not None else 1.0 / math.sqrt(d_in)

    def validate_for(self, d_out: int, d_in: int, name: str = "layer") -> None:
        """Raise ConfigError when this config cannot wrap a d_out x d_in weight."""
        if self.kind in RANKED_KINDS and self.rank > min(d_in, d_out):
            raise ConfigError(
                f"adapter.rank: {self.rank} exceeds min dimension "
                f"{min(d_in, d_out)} of {name} ({d_out}x{d_in})"
            )
        if self.kind is AdapterKind.MISS and d_in % self.group != 0:
            raise ConfigError(
                f"adapter.miss_group: {self.group} does not divide d_in={d_in} "
                f"of {name}"
            )
