"""Adapter initialisation, one rule per kind."""

import logging
import math

import numpy as np

from ..config import IA3_INPUT_MODULES, IA3_OUTPUT_MODULES, NORM_GUARD
from ..errors import ConfigError, UnsupportedKindError
from ..tensor import Matrix, Node, Rng, as_matrix, parameter, svd
from .config import AdapterConfig, AdapterKind
from .state import (
    AdaLoRAState,
    AdapterState,
    DoRAState,
    FrozenState,
    FullState,
    IA3State,
    LowRankState,
    MiSSState,
    VeRAState,
)

logger = logging.getLogger(__name__)

# One frozen (A, B) pair per (d_out, d_in) shape, shared across VeRA layers
SharedBank = dict[tuple[int, int], tuple[Node, Node]]


def make_adapter(
    kind: AdapterKind,
    W0: Matrix,
    cfg: AdapterConfig,
    rng: Rng,
    module: str | None = None,
    shared_bank: SharedBank | None = None,
) -> AdapterState:
    """Build the initial adapter state for frozen weight ``W0`` (d_out x d_in).

    ``module`` is the projection name (``k_proj``, ``down_proj``...) and only
    matters for IA3, which attaches to a fixed subset of projections. Every
    kind starts at a state whose adapted forward equals the base forward.

    Raises:
        ConfigError: If the rank exceeds min(d_in, d_out) or the MiSS group
            does not divide d_in
    """
    W0 = as_matrix(W0, "W0")
    d_out, d_in = W0.shape
    if kind is not cfg.kind:
        raise ConfigError(f"adapter.kind: requested {kind} but config holds {cfg.kind}")
    cfg.validate_for(d_out, d_in, module or "layer")
    sigma = cfg.sigma_for(d_in)
    r = cfg.rank

    match kind:
        case AdapterKind.FULL:
            return FullState(W=parameter(W0, "W"))

        case AdapterKind.LORA | AdapterKind.RSLORA | AdapterKind.LORA_PLUS:
            return LowRankState(
                A=parameter(rng.normal((r, d_in), sigma), "lora_A"),
                B=parameter(np.zeros((d_out, r)), "lora_B"),
            )

        case AdapterKind.LORA_FA:
            return LowRankState(
                A=parameter(rng.normal((r, d_in), sigma), "lora_A", trainable=False),
                B=parameter(np.zeros((d_out, r)), "lora_B"),
            )

        case AdapterKind.DORA:
            bound = math.sqrt(6.0 / d_in)
            return DoRAState(
                A=parameter(rng.uniform((r, d_in), -bound, bound), "lora_A"),
                B=parameter(np.zeros((d_out, r)), "lora_B"),
                m=parameter(
                    np.sqrt(np.sum(np.square(W0), axis=1)) + NORM_GUARD, "dora_m"
                ),
            )

        case AdapterKind.PISSA | AdapterKind.MILORA:
            return _svd_split(kind, W0, r)

        case AdapterKind.ADALORA:
            return AdaLoRAState(
                P=parameter(rng.normal((d_out, r), sigma), "ada_P"),
                lam=parameter(np.zeros(r), "ada_lambda"),
                Q=parameter(rng.normal((r, d_in), sigma), "ada_Q"),
                mask=parameter(np.ones(r), "ada_mask", trainable=False),
            )

        case AdapterKind.MISS:
            return MiSSState(D=parameter(np.zeros((d_out, cfg.group)), "miss_D"))

        case AdapterKind.VERA:
            bank = shared_bank if shared_bank is not None else {}
            if (d_out, d_in) not in bank:
                shared = rng.substream("vera-shared")
                bank[(d_out, d_in)] = (
                    parameter(
                        _kaiming_uniform(shared, (r, d_in)), "vera_A", trainable=False
                    ),
                    parameter(
                        _kaiming_uniform(shared, (d_out, r)), "vera_B", trainable=False
                    ),
                )
            A_shared, B_shared = bank[(d_out, d_in)]
            if A_shared.shape[0] != r:
                raise ConfigError(
                    f"adapter.rank: shared VeRA pair for {d_out}x{d_in} has rank "
                    f"{A_shared.shape[0]}, not {r}"
                )
            return VeRAState(
                A_shared=A_shared,
                B_shared=B_shared,
                d=parameter(np.full(r, 0.1), "vera_d"),
                b=parameter(np.zeros(d_out), "vera_b"),
            )

        case AdapterKind.IA3:
            if module in IA3_OUTPUT_MODULES:
                return IA3State(l=parameter(np.ones(d_out), "ia3_l"), side="output")
            if module in IA3_INPUT_MODULES:
                return IA3State(l=parameter(np.ones(d_in), "ia3_l"), side="input")
            return FrozenState()

        case AdapterKind.LN_TUNING:
            # Linear layers stay frozen; LayerNorm states carry the trainable tensors
            return FrozenState()

    raise UnsupportedKindError(f"make_adapter: unknown adapter kind {kind!r}")


def _svd_split(kind: AdapterKind, W0: Matrix, r: int) -> LowRankState:
    """PiSSA takes the top-r singular triplets, MiLoRA the bottom-r."""
    U, S, V = svd(W0)
    k = S.shape[0]
    idx = np.arange(r) if kind is AdapterKind.PISSA else np.arange(k - r, k)
    root = np.sqrt(S[idx])
    B = U[:, idx] * root
    A = root[:, None] * V[:, idx].T
    logger.debug(
        "%s split: kept singular values %s of %d", kind, np.round(S[idx], 6).tolist(), k
    )
    return LowRankState(
        A=parameter(A, "lora_A"),
        B=parameter(B, "lora_B"),
        W_res=parameter(W0 - B @ A, "W_res", trainable=False),
    )


def _kaiming_uniform(rng: Rng, shape: tuple[int, int]) -> Matrix:
    bound = math.sqrt(6.0 / shape[1])
    return rng.uniform(shape, -bound, bound)
