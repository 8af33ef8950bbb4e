"""Reverse-mode automatic differentiation over float64 numpy arrays.

A ``Node`` wraps a value and, when it was produced by a differentiable
operation on nodes that require gradients, a reference to its parents and
the local backward rule. ``backward`` walks the graph once in reverse
topological order, accumulates gradients into leaf nodes, then releases the
intermediate graph.
"""

import contextlib
import threading
from collections.abc import Callable, Iterator, Sequence

import numpy as np
import numpy.typing as npt

from ..config import LAYER_NORM_EPS
from ..errors import ContractError, DimensionError, NumericalError

Array = npt.NDArray[np.float64]
BackwardFn = Callable[[Array], Sequence[Array | None]]

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Node:
    """A value in the computation graph."""

    __slots__ = ("value", "requires_grad", "name", "_grad", "_parents", "_backward")

    def __init__(
        self,
        value: npt.ArrayLike,
        requires_grad: bool = False,
        name: str = "",
    ):
        self.value: Array = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self._grad: Array | None = None
        self._parents: tuple[Node, ...] = ()
        self._backward: BackwardFn | None = None

    @property
    def grad(self) -> Array:
        if self._grad is None:
            return np.zeros_like(self.value)
        return self._grad

    @grad.setter
    def grad(self, value: Array) -> None:
        self._grad = np.asarray(value, dtype=np.float64)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def zero_grad(self) -> None:
        self._grad = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Node{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: "Operand") -> "Node":
        return add(self, other)

    def __radd__(self, other: "Operand") -> "Node":
        return add(other, self)

    def __sub__(self, other: "Operand") -> "Node":
        return sub(self, other)

    def __rsub__(self, other: "Operand") -> "Node":
        return sub(other, self)

    def __mul__(self, other: "Operand") -> "Node":
        return mul(self, other)

    def __rmul__(self, other: "Operand") -> "Node":
        return mul(other, self)

    def __truediv__(self, other: "Operand") -> "Node":
        return div(self, other)

    def __rtruediv__(self, other: "Operand") -> "Node":
        return div(other, self)

    def __neg__(self) -> "Node":
        return neg(self)

    def __matmul__(self, other: "Operand") -> "Node":
        return matmul(self, other)

    def __pow__(self, exponent: float) -> "Node":
        return power(self, exponent)

    def __getitem__(self, key: object) -> "Node":
        return index(self, key)

    @property
    def T(self) -> "Node":
        return transpose(self)


Operand = Node | npt.ArrayLike


def as_node(x: Operand) -> Node:
    return x if isinstance(x, Node) else Node(x)


def parameter(value: npt.ArrayLike, name: str, trainable: bool = True) -> Node:
    """Create a leaf tensor; ``trainable`` sets requires-grad."""
    if isinstance(value, Node):
        raise ContractError(f"parameter {name}: expected an array, got a Node")
    return Node(np.array(value, dtype=np.float64), requires_grad=trainable, name=name)


def _result(value: Array, parents: Sequence[Node], backward_fn: BackwardFn) -> Node:
    requires = is_grad_enabled() and any(p.requires_grad for p in parents)
    out = Node(value, requires_grad=requires)
    if requires:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)

    def backward_fn(g: Array) -> tuple[Array, Array]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.value + b.value, (a, b), backward_fn)


def sub(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)

    def backward_fn(g: Array) -> tuple[Array, Array]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.value - b.value, (a, b), backward_fn)


def neg(a: Operand) -> Node:
    a = as_node(a)
    return _result(-a.value, (a,), lambda g: (-g,))


def mul(a: Operand, b: Operand) -> Node:
    """Hadamard product with broadcasting."""
    a, b = as_node(a), as_node(b)

    def backward_fn(g: Array) -> tuple[Array, Array]:
        return (
            _unbroadcast(g * b.value, a.shape),
            _unbroadcast(g * a.value, b.shape),
        )

    return _result(a.value * b.value, (a, b), backward_fn)


def div(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    if np.any(b.value == 0.0):
        raise NumericalError("div: division by zero")

    def backward_fn(g: Array) -> tuple[Array, Array]:
        return (
            _unbroadcast(g / b.value, a.shape),
            _unbroadcast(-g * a.value / np.square(b.value), b.shape),
        )

    return _result(a.value / b.value, (a, b), backward_fn)


def power(a: Operand, exponent: float) -> Node:
    a = as_node(a)
    value = np.power(a.value, exponent)

    def backward_fn(g: Array) -> tuple[Array]:
        return (g * exponent * np.power(a.value, exponent - 1),)

    return _result(value, (a,), backward_fn)


def sqrt(a: Operand) -> Node:
    a = as_node(a)
    if np.any(a.value < 0.0):
        raise NumericalError("sqrt: negative operand")
    value = np.sqrt(a.value)

    def backward_fn(g: Array) -> tuple[Array]:
        return (g * 0.5 / value,)

    return _result(value, (a,), backward_fn)


def exp(a: Operand) -> Node:
    a = as_node(a)
    value = np.exp(a.value)
    if not np.all(np.isfinite(value)):
        raise NumericalError("exp: overflow")
    return _result(value, (a,), lambda g: (g * value,))


def log(a: Operand) -> Node:
    a = as_node(a)
    if np.any(a.value <= 0.0):
        raise NumericalError("log: non-positive operand")
    return _result(np.log(a.value), (a,), lambda g: (g / a.value,))


def silu(a: Operand) -> Node:
    """x * sigmoid(x); the sigmoid only ever exponentiates -|x|."""
    a = as_node(a)
    z = np.exp(-np.abs(a.value))
    s = np.where(a.value >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))

    def backward_fn(g: Array) -> tuple[Array]:
        return (g * (s + a.value * s * (1.0 - s)),)

    return _result(a.value * s, (a,), backward_fn)


def clip(a: Operand, low: float, high: float) -> Node:
    """Clamp into [low, high]; gradient passes inside the closed interval."""
    a = as_node(a)
    inside = (a.value >= low) & (a.value <= high)
    return _result(np.clip(a.value, low, high), (a,), lambda g: (g * inside,))


def minimum(a: Operand, b: Operand) -> Node:
    """Elementwise minimum; ties route the gradient to ``a``."""
    a, b = as_node(a), as_node(b)
    take_a = a.value <= b.value

    def backward_fn(g: Array) -> tuple[Array, Array]:
        return (
            _unbroadcast(np.where(take_a, g, 0.0), a.shape),
            _unbroadcast(np.where(take_a, 0.0, g), b.shape),
        )

    return _result(np.minimum(a.value, b.value), (a, b), backward_fn)


# ---------------------------------------------------------------------------
# Shape and reduction
# ---------------------------------------------------------------------------


def matmul(a: Operand, b: Operand) -> Node:
    """Matrix product, batched over leading axes like ``numpy.matmul``."""
    a, b = as_node(a), as_node(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward_fn(g: Array) -> tuple[Array, Array]:
        grad_a = np.matmul(g, np.swapaxes(b.value, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.value, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(np.matmul(a.value, b.value), (a, b), backward_fn)


def transpose(a: Operand, axes: Sequence[int] | None = None) -> Node:
    a = as_node(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(int(i) for i in np.argsort(axes))
    return _result(
        np.transpose(a.value, axes), (a,), lambda g: (np.transpose(g, inverse),)
    )


def reshape(a: Operand, shape: Sequence[int]) -> Node:
    a = as_node(a)
    return _result(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def index(a: Operand, key: object) -> Node:
    """numpy indexing; gradients scatter-add into the selected entries."""
    a = as_node(a)

    def backward_fn(g: Array) -> tuple[Array]:
        grad = np.zeros_like(a.value)
        np.add.at(grad, key, g)
        return (grad,)

    return _result(np.asarray(a.value[key]), (a,), backward_fn)


def sum(  # noqa: A001
    a: Operand, axis: int | None = None, keepdims: bool = False
) -> Node:
    a = as_node(a)

    def backward_fn(g: Array) -> tuple[Array]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(np.sum(a.value, axis=axis, keepdims=keepdims), (a,), backward_fn)


def mean(a: Operand, axis: int | None = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    count = a.value.size if axis is None else a.shape[axis]
    return sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


# ---------------------------------------------------------------------------
# Neural-network primitives
# ---------------------------------------------------------------------------


def softmax(a: Operand, axis: int = -1) -> Node:
    a = as_node(a)
    shifted = a.value - np.max(a.value, axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=axis, keepdims=True)

    def backward_fn(g: Array) -> tuple[Array]:
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)

    return _result(y, (a,), backward_fn)


def log_softmax(a: Operand, axis: int = -1) -> Node:
    a = as_node(a)
    shifted = a.value - np.max(a.value, axis=axis, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    y = shifted - lse
    probs = np.exp(y)

    def backward_fn(g: Array) -> tuple[Array]:
        return (g - probs * np.sum(g, axis=axis, keepdims=True),)

    return _result(y, (a,), backward_fn)


def layer_norm(
    x: Operand, gain: Operand, bias: Operand, eps: float = LAYER_NORM_EPS
) -> Node:
    """(gain / sigma) * (x - mu) + bias over the last axis."""
    x, gain, bias = as_node(x), as_node(gain), as_node(bias)
    mu = np.mean(x.value, axis=-1, keepdims=True)
    centered = x.value - mu
    variance = np.mean(np.square(centered), axis=-1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(variance + eps)
    x_hat = centered * inv_sigma

    def backward_fn(g: Array) -> tuple[Array, Array, Array]:
        d_hat = g * gain.value
        grad_x = inv_sigma * (
            d_hat
            - np.mean(d_hat, axis=-1, keepdims=True)
            - x_hat * np.mean(d_hat * x_hat, axis=-1, keepdims=True)
        )
        return (
            grad_x,
            _unbroadcast(g * x_hat, gain.shape),
            _unbroadcast(g, bias.shape),
        )

    return _result(x_hat * gain.value + bias.value, (x, gain, bias), backward_fn)


def embedding(table: Node, indices: npt.ArrayLike) -> Node:
    """Gather rows of ``table``; gradients scatter-add back into the table."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise DimensionError(
            f"embedding: index out of range for table of {table.shape[0]} rows"
        )

    def backward_fn(g: Array) -> tuple[Array]:
        grad = np.zeros_like(table.value)
        np.add.at(grad, idx, g)
        return (grad,)

    return _result(table.value[idx], (table,), backward_fn)


def pick(a: Operand, indices: npt.ArrayLike) -> Node:
    """Select one entry along the last axis per leading position."""
    a = as_node(a)
    idx = np.asarray(indices, dtype=np.int64)[..., None]
    if idx.shape[:-1] != a.shape[:-1]:
        raise DimensionError(f"pick: indices {idx.shape[:-1]} do not match {a.shape}")

    def backward_fn(g: Array) -> tuple[Array]:
        grad = np.zeros_like(a.value)
        np.put_along_axis(grad, idx, g[..., None], axis=-1)
        return (grad,)

    return _result(np.take_along_axis(a.value, idx, axis=-1)[..., 0], (a,), backward_fn)


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------


def _topological_order(root: Node) -> list[Node]:
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Accumulate dLoss/dLeaf into every requires-grad leaf, then free the graph."""
    if loss.value.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    order = _topological_order(loss)
    pending: dict[int, Array] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node._grad = node.grad + g
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g), strict=True):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad

    for node in order:
        node._parents = ()
        node._backward = None
