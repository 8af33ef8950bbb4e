"""Seeded, counter-based random streams with named substreams."""

import hashlib
from typing import Final

import numpy as np
import numpy.typing as npt

from ..errors import ContractError

ALGORITHM: Final[str] = "philox"


def _derive_key(seed: int, path: tuple[str, ...]) -> int:
    material = "/".join((str(seed), *path)).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(material, digest_size=16).digest(), "little")


class Rng:
    """A Philox stream keyed by ``seed`` and the substream path.

    Two instances with the same seed and path produce identical draws.
    ``substream(name, index)`` derives an independent child stream, so the
    order in which siblings are consumed never affects one another.
    """

    algorithm: Final[str] = ALGORITHM

    def __init__(self, seed: int, path: tuple[str, ...] = ()):
        if not 0 <= seed < 2**64:
            raise ContractError(f"rng seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self.path = path
        key = _derive_key(seed, path)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={'/'.join(self.path) or '-'})"

    def substream(self, name: str, index: int = 0) -> "Rng":
        return Rng(self.seed, (*self.path, f"{name}:{index}"))

    def normal(
        self, shape: tuple[int, ...], std: float = 1.0
    ) -> npt.NDArray[np.float64]:
        return self._generator.normal(0.0, std, size=shape)

    def uniform(
        self, shape: tuple[int, ...], low: float, high: float
    ) -> npt.NDArray[np.float64]:
        return self._generator.uniform(low, high, size=shape)

    def random(self) -> float:
        return float(self._generator.random())

    def integers(self, low: int, high: int) -> int:
        """One integer drawn uniformly from [low, high)."""
        return int(self._generator.integers(low, high))

    def distinct(self, high: int, count: int) -> list[int]:
        """``count`` distinct integers from [0, high), in draw order."""
        if not 0 <= count <= high:
            raise ContractError(f"cannot draw {count} distinct values below {high}")
        return [int(v) for v in self._generator.choice(high, size=count, replace=False)]

    def keep_mask(
        self, shape: tuple[int, ...], keep_prob: float
    ) -> npt.NDArray[np.bool_]:
        return self._generator.random(size=shape) < keep_prob
