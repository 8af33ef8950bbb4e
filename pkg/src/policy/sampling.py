"""Temperature and nucleus (top-p) sampling from the policy."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..config import EOS_TOKEN, PAD_TOKEN
from ..errors import ContractError
from ..tensor import Rng, Vector, no_grad
from .forward import forward_batch, log_softmax
from .net import PolicyNet


@dataclass(frozen=True)
class Sample:
    """One completion and the untempered policy log-prob of each token."""

    tokens: tuple[int, ...]
    log_probs: Vector


def _check_sampling(temperature: float, top_p: float) -> None:
    if temperature < 0:
        raise ContractError(f"temperature must be >= 0, got {temperature}")
    if not 0 < top_p <= 1:
        raise ContractError(f"top_p must lie in (0, 1], got {top_p}")


def sample_token(
    logits: npt.NDArray[np.float64], temperature: float, top_p: float, rng: Rng
) -> int:
    """Draw one token id.

    Temperature 0 is greedy argmax. Otherwise the descending-probability
    prefix whose mass first reaches ``top_p`` is kept, boundary token
    included, and the draw is an inverse-CDF lookup on one uniform.
    """
    if temperature == 0:
        return int(np.argmax(logits))
    scaled = logits / temperature
    probs = np.exp(scaled - np.max(scaled))
    probs /= probs.sum()

    order = np.argsort(-probs, kind="stable")
    cumulative = np.cumsum(probs[order])
    cutoff = min(int(np.searchsorted(cumulative, top_p)), len(order) - 1)
    kept = cumulative[: cutoff + 1]
    pick = int(np.searchsorted(kept, rng.random() * kept[-1], side="right"))
    return int(order[min(pick, cutoff)])


def sample_completions(
    net: PolicyNet,
    prompt: Sequence[int],
    rngs: Sequence[Rng],
    temperature: float,
    top_p: float,
    max_new: int,
) -> list[Sample]:
    """Sample ``len(rngs)`` completions in one batch, one stream per completion.

    Each completion stops at EOS (kept) or after ``max_new`` tokens, and
    never runs past the context window.
    """
    _check_sampling(temperature, top_p)
    if len(prompt) == 0:
        raise ContractError("sample_completions: prompt must be non-empty")
    count = len(rngs)
    budget = max(0, min(max_new, net.cfg.max_seq - len(prompt)))

    seqs = np.tile(np.asarray(prompt, dtype=np.int64), (count, 1))
    done = np.zeros(count, dtype=bool)
    tokens: list[list[int]] = [[] for _ in range(count)]
    log_probs: list[list[float]] = [[] for _ in range(count)]

    for _ in range(budget):
        with no_grad():
            logits = forward_batch(net, seqs).value[:, -1, :]
        logp = log_softmax(logits)
        step = np.full(count, PAD_TOKEN, dtype=np.int64)
        for i in np.flatnonzero(~done):
            tok = sample_token(logits[i], temperature, top_p, rngs[i])
            step[i] = tok
            tokens[i].append(tok)
            log_probs[i].append(float(logp[i, tok]))
            if tok == EOS_TOKEN:
                done[i] = True
        seqs = np.concatenate([seqs, step[:, None]], axis=1)
        if done.all():
            break

    return [
        Sample(tuple(t), np.asarray(lp, dtype=np.float64))
        for t, lp in zip(tokens, log_probs, strict=True)
    ]


def sample_completion(
    net: PolicyNet,
    prompt: Sequence[int],
    temperature: float,
    top_p: float,
    max_new: int,
    rng: Rng,
) -> list[int]:
    samples = sample_completions(net, prompt, [rng], temperature, top_p, max_new)
    return list(samples[0].tokens)
