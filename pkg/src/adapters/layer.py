"""Linear layers wrapped with an adapter, plus merged-delta extraction.

Inside the network activations are row batches ``(..., d_in)`` and a layer
computes ``x @ W.T``. ``adapter_forward`` offers the column convention
``y = W x`` for a single vector or a ``d_in x n`` block.
"""

from collections.abc import Iterator

import numpy as np
import numpy.typing as npt

from ..config import NORM_GUARD, TARGET_MODULES
from ..errors import ContractError, DimensionError, UnsupportedKindError
from ..tensor import Matrix, Node, Rng, no_grad, parameter
from ..tensor import autodiff as ad
from .config import VECTOR_KINDS, AdapterConfig, AdapterKind
from .state import (
    NON_PARAMETER_SUFFIXES,
    AdaLoRAState,
    AdapterState,
    DoRAState,
    FrozenState,
    FullState,
    IA3State,
    LayerNormState,
    LowRankState,
    MiSSState,
    VeRAState,
)


class LinearWithAdapter:
    """A frozen projection ``W0`` (d_out x d_in) and the adapter around it."""

    def __init__(
        self,
        name: str,
        W0: npt.ArrayLike,
        state: AdapterState | None = None,
        cfg: AdapterConfig | None = None,
    ):
        module = name.rsplit(".", 1)[-1]
        if module not in TARGET_MODULES:
            raise ContractError(
                f"{name}: {module!r} is not one of {', '.join(TARGET_MODULES)}"
            )
        self.name = name
        self.W0 = parameter(W0, "W0", trainable=False)
        self.state: AdapterState = state if state is not None else FrozenState()
        self.cfg = cfg

    @property
    def module(self) -> str:
        return self.name.rsplit(".", 1)[-1]

    @property
    def kind(self) -> AdapterKind | None:
        return self.cfg.kind if self.cfg is not None else None

    @property
    def d_out(self) -> int:
        return self.W0.shape[0]

    @property
    def d_in(self) -> int:
        return self.W0.shape[1]

    def __repr__(self) -> str:
        return (
            f"LinearWithAdapter({self.name!r}, {self.d_out}x{self.d_in}, "
            f"{self.kind})"
        )

    def base_weight(self) -> Node:
        """The weight on the base path: W, W_res, or the frozen W0."""
        if isinstance(self.state, FullState):
            return self.state.W
        if isinstance(self.state, LowRankState) and self.state.W_res is not None:
            return self.state.W_res
        return self.W0

    def named_tensors(self) -> Iterator[tuple[str, Node]]:
        """Every tensor owned by the layer, W0 included."""
        yield f"{self.name}.W0", self.W0
        for suffix, node in self.state.tensors().items():
            yield f"{self.name}.{suffix}", node

    def named_parameters(self) -> Iterator[tuple[str, Node]]:
        """Tensors the forward pass reads, with W0 dropped where it is replaced."""
        base = self.base_weight()
        if base is self.W0:
            yield f"{self.name}.W0", self.W0
        for suffix, node in self.state.tensors().items():
            if suffix not in NON_PARAMETER_SUFFIXES:
                yield f"{self.name}.{suffix}", node

    def __call__(self, x: Node, training: bool = False, rng: Rng | None = None) -> Node:
        if x.shape[-1] != self.d_in:
            raise DimensionError(
                f"{self.name}: input width {x.shape[-1]} does not match "
                f"d_in={self.d_in}"
            )
        state = self.state
        base = ad.matmul(x, self.base_weight().T)

        match state:
            case FrozenState() | FullState():
                return base
            case IA3State(side="output"):
                return base * state.l
            case IA3State(side="input"):
                return ad.matmul(x * state.l, self.W0.T)

        scale = self.cfg.scale if self.cfg is not None else 1.0
        xd = self._dropout(x, training, rng)
        match state:
            case LowRankState():
                return base + ad.matmul(ad.matmul(xd, state.A.T), state.B.T) * scale
            case DoRAState():
                delta = ad.matmul(ad.matmul(xd, state.A.T), state.B.T) * scale
                return (base + delta) * (state.m / dora_norms(self.W0, state, scale))
            case AdaLoRAState():
                live = state.lam * state.mask.value
                return base + ad.matmul(ad.matmul(xd, state.Q.T) * live, state.P.T)
            case MiSSState():
                g = state.D.shape[1]
                blocks = ad.reshape(xd, (*xd.shape[:-1], self.d_in // g, g))
                return base + ad.matmul(ad.sum(blocks, axis=-2), state.D.T)
            case VeRAState():
                inner = ad.matmul(xd, state.A_shared.T) * state.d
                return base + ad.matmul(inner, state.B_shared.T) * state.b
        raise UnsupportedKindError(
            f"{self.name}: no forward rule for {type(state).__name__}"
        )

    def _dropout(self, x: Node, training: bool, rng: Rng | None) -> Node:
        p = self.cfg.dropout if self.cfg is not None else 0.0
        if not training or p == 0.0 or rng is None:
            return x
        keep = rng.keep_mask(x.shape, 1.0 - p)
        return x * (keep / (1.0 - p))


def dora_norms(W0: Node, state: DoRAState, scale: float) -> Node:
    """Guarded per-output-unit norms of W0 + scale * B A, differentiable."""
    V = W0 + ad.matmul(state.B, state.A) * scale
    return ad.sqrt(ad.sum(V * V, axis=1)) + NORM_GUARD


def adapter_forward(
    layer: LinearWithAdapter,
    x: npt.ArrayLike,
    training: bool = False,
    rng: Rng | None = None,
) -> Matrix:
    """Apply ``layer`` to ``x`` of shape (d_in,) or (d_in, n); returns W x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] != layer.d_in:
        raise DimensionError(
            f"{layer.name}: expected x with {layer.d_in} rows, got shape {x.shape}"
        )
    with no_grad():
        rows = np.atleast_2d(x.T)
        y = layer(Node(rows), training=training, rng=rng).value
    return y[0] if x.ndim == 1 else y.T


def merge_delta(layer: LinearWithAdapter) -> Matrix:
    """ΔW such that the adapted layer computes (W0 + ΔW) x.

    Raises:
        UnsupportedKindError: For IA3 and LN tuning, which have no weight delta
    """
    if layer.kind in VECTOR_KINDS:
        raise UnsupportedKindError(
            f"merge_delta: {layer.kind} has no weight-space delta"
        )
    W0 = layer.W0.value
    state = layer.state
    scale = layer.cfg.scale if layer.cfg is not None else 1.0
    match state:
        case FrozenState():
            return np.zeros_like(W0)
        case FullState():
            return state.W.value - W0
        case LowRankState():
            base = state.W_res.value if state.W_res is not None else W0
            return base + scale * (state.B.value @ state.A.value) - W0
        case DoRAState():
            with no_grad():
                norms = dora_norms(layer.W0, state, scale).value
            merged = W0 + scale * (state.B.value @ state.A.value)
            return (state.m.value / norms)[:, None] * merged - W0
        case AdaLoRAState():
            live = state.lam.value * state.mask.value
            return (state.P.value * live) @ state.Q.value
        case MiSSState():
            return np.tile(state.D.value, (1, layer.d_in // state.D.shape[1]))
        case VeRAState():
            return (state.b.value[:, None] * state.B_shared.value * state.d.value) @ (
                state.A_shared.value
            )
    raise UnsupportedKindError(f"merge_delta: no rule for {type(state).__name__}")


def layer_norm_forward(state: LayerNormState, x: Node) -> Node:
    """(gain / sigma) * (x - mu) + bias over the feature axis."""
    return ad.layer_norm(x, state.gain, state.bias)
