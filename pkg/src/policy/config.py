"""Shape of the policy network."""

from dataclasses import dataclass

from ..config import DEFAULT_POLICY
from ..errors import ConfigError


@dataclass(frozen=True)
class PolicyConfig:
    vocab: int = DEFAULT_POLICY["vocab"]
    d_model: int = DEFAULT_POLICY["d_model"]
    n_layers: int = DEFAULT_POLICY["n_layers"]
    n_heads: int = DEFAULT_POLICY["n_heads"]
    d_ff: int = DEFAULT_POLICY["d_ff"]
    max_seq: int = DEFAULT_POLICY["max_seq"]

    def __post_init__(self) -> None:
        for field_name in (
            "vocab", "d_model", "n_layers", "n_heads", "d_ff", "max_seq"
        ):
            if getattr(self, field_name) < 1:
                raise ConfigError(f"policy.{field_name}: must be >= 1")
        if self.vocab < 4:
            raise ConfigError(
                f"policy.vocab: must reserve 4 special tokens, got {self.vocab}"
            )
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"policy.d_model: {self.d_model} is not divisible by "
                f"n_heads={self.n_heads}"
            )

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads
