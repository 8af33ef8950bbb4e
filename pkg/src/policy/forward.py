"""Logits and log-probabilities of the policy network."""

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from ..adapters import layer_norm_forward
from ..errors import ContractError
from ..tensor import Matrix, Node, Rng, Vector, no_grad
from ..tensor import autodiff as ad
from .net import PolicyNet

MASK_VALUE = -1e30

Tokens = npt.NDArray[np.int64]


def check_tokens(net: PolicyNet, tokens: npt.ArrayLike) -> Tokens:
    """Validate a (batch, seq) token array against vocab and context length."""
    arr = np.asarray(tokens, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape[1] > net.cfg.max_seq:
        raise ContractError(
            f"sequence length {arr.shape[1]} exceeds max_seq {net.cfg.max_seq}"
        )
    if arr.size and (arr.min() < 0 or arr.max() >= net.cfg.vocab):
        bad = int(arr[(arr < 0) | (arr >= net.cfg.vocab)][0])
        raise ContractError(f"token id {bad} outside vocab of {net.cfg.vocab}")
    return arr


def forward_batch(
    net: PolicyNet,
    tokens: npt.ArrayLike,
    training: bool = False,
    rng: Rng | None = None,
) -> Node:
    """Logits of shape (batch, seq, vocab) for right-padded token rows."""
    tokens = check_tokens(net, tokens)
    batch, seq = tokens.shape
    cfg = net.cfg
    heads, head_dim = cfg.n_heads, cfg.head_dim

    h = ad.embedding(net.tok_emb, tokens) + ad.embedding(net.pos_emb, np.arange(seq))
    causal = np.triu(np.full((seq, seq), MASK_VALUE), k=1)

    def split_heads(x: Node) -> Node:
        return ad.transpose(ad.reshape(x, (batch, seq, heads, head_dim)), (0, 2, 1, 3))

    for block in net.blocks:
        p = block.proj
        a = layer_norm_forward(block.ln1, h)
        q = split_heads(p["q_proj"](a, training, _sub(rng, p["q_proj"].name)))
        k = split_heads(p["k_proj"](a, training, _sub(rng, p["k_proj"].name)))
        v = split_heads(p["v_proj"](a, training, _sub(rng, p["v_proj"].name)))
        scores = ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(head_dim))
        attn = ad.softmax(scores + causal, axis=-1)
        ctx = ad.reshape(
            ad.transpose(ad.matmul(attn, v), (0, 2, 1, 3)), (batch, seq, cfg.d_model)
        )
        h = h + p["o_proj"](ctx, training, _sub(rng, p["o_proj"].name))

        f = layer_norm_forward(block.ln2, h)
        gate = ad.silu(p["gate_proj"](f, training, _sub(rng, p["gate_proj"].name)))
        up = p["up_proj"](f, training, _sub(rng, p["up_proj"].name))
        h = h + p["down_proj"](gate * up, training, _sub(rng, p["down_proj"].name))

    h = layer_norm_forward(net.ln_f, h)
    return ad.matmul(h, net.head.T)


def _sub(rng: Rng | None, name: str) -> Rng | None:
    return rng.substream(name) if rng is not None else None


def forward_logits(net: PolicyNet, tokens: Sequence[int]) -> Matrix:
    """(seq x vocab) logits; row t conditions on tokens[: t + 1]."""
    with no_grad():
        return forward_batch(net, [list(tokens)]).value[0]


def log_softmax(logits: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def sequence_log_prob(
    net: PolicyNet, prompt: Sequence[int], completion: Sequence[int]
) -> Vector:
    """Per-token log pi(completion[j] | prompt, completion[:j])."""
    if len(prompt) == 0:
        raise ContractError("sequence_log_prob: prompt must be non-empty")
    if len(completion) == 0:
        check_tokens(net, list(prompt))
        return np.zeros(0)
    tokens = [*prompt, *completion]
    logp = log_softmax(forward_logits(net, tokens))
    positions = np.arange(len(prompt) - 1, len(tokens) - 1)
    return logp[positions, np.asarray(completion, dtype=np.int64)]


def completion_log_probs(
    net: PolicyNet,
    prompt: Sequence[int],
    completions: npt.ArrayLike,
    training: bool = False,
    rng: Rng | None = None,
) -> Node:
    """Differentiable (G, L) log-probs of right-padded completions after ``prompt``."""
    comps = np.asarray(completions, dtype=np.int64)
    if comps.ndim != 2 or comps.shape[1] == 0:
        raise ContractError(
            f"completion_log_probs: expected (G, L>0) completions, got {comps.shape}"
        )
    prefix = np.tile(np.asarray(prompt, dtype=np.int64), (comps.shape[0], 1))
    return span_log_probs(
        net, np.concatenate([prefix, comps], axis=1), len(prompt), training, rng
    )


def span_log_probs(
    net: PolicyNet,
    tokens: npt.ArrayLike,
    start: int,
    training: bool = False,
    rng: Rng | None = None,
) -> Node:
    """Differentiable log-probs of ``tokens[:, start:]`` given everything before."""
    tokens = check_tokens(net, tokens)
    if not 1 <= start < tokens.shape[1]:
        raise ContractError(
            f"span_log_probs: start {start} outside [1, {tokens.shape[1]})"
        )
    logits = forward_batch(net, tokens, training=training, rng=rng)
    window = logits[:, start - 1 : tokens.shape[1] - 1, :]
    return ad.pick(ad.log_softmax(window, axis=-1), tokens[:, start:])
