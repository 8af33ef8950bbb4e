"""Controlled principal-gradient probe.

A single adapted layer is trained on ``0.5 * ||ΔW - T||_F^2`` where the
target ``T`` spans the top-r singular pairs of the frozen weight plus a
little isotropic noise. The resulting spectral profile shows whether the
adapter, wherever it was initialised, moves its update into the principal
subspace.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..adapters import (
    VECTOR_KINDS,
    AdapterConfig,
    LinearWithAdapter,
    make_adapter,
    merge_delta,
)
from ..errors import UnsupportedKindError
from ..spectra import SpectralBasis, SpectralProfile, project_update
from ..tensor import Matrix, Node, Rng, backward, svd
from ..tensor import autodiff as ad
from .optim import adam_step, make_optimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeResult:
    profile: SpectralProfile
    losses: list[float]
    basis: SpectralBasis


def probe_weight(
    d_out: int, d_in: int, rng: Rng, decay: float = 0.7, tail: float = 1e-4
) -> Matrix:
    """Random-basis weight with geometric head spectrum and a tiny lower half."""
    U, _, _ = svd(rng.substream("left").normal((d_out, d_out)))
    V, _, _ = svd(rng.substream("right").normal((d_in, d_in)))
    k = min(d_out, d_in)
    sigma = decay ** np.arange(k, dtype=np.float64)
    sigma[k // 2 :] = tail * decay ** np.arange(k - k // 2, dtype=np.float64)
    return (U[:, :k] * sigma) @ V[:, :k].T


def principal_gradient_probe(
    cfg: AdapterConfig,
    rng: Rng,
    d_out: int = 16,
    d_in: int = 16,
    steps: int = 100,
    lr: float = 0.05,
    gamma: float = 1.0,
    noise: float = 1e-3,
) -> ProbeResult:
    if cfg.kind in VECTOR_KINDS:
        raise UnsupportedKindError(
            f"principal_gradient_probe: {cfg.kind} has no weight delta"
        )
    W0 = probe_weight(d_out, d_in, rng.substream("weight"))
    basis = SpectralBasis.of(W0)
    r = cfg.rank
    target = gamma * basis.U[:, :r] @ basis.V[:, :r].T
    target = target + noise * rng.substream("noise").normal((d_out, d_in))

    layer = LinearWithAdapter(
        "probe.q_proj",
        W0,
        make_adapter(cfg.kind, W0, cfg, rng.substream("adapter")),
        cfg,
    )
    optimizer = make_optimizer(layer, lr, cfg)
    identity = Node(np.eye(d_in))
    losses = []
    for _ in range(steps):
        for group in optimizer.groups:
            for _, node in group.params:
                node.zero_grad()
        # Rows of layer(I) are the columns of the effective weight
        gap = layer(identity) - (W0 + target).T
        loss = ad.sum(gap * gap) * 0.5
        backward(loss)
        adam_step(
            optimizer,
            {
                name: node.grad
                for group in optimizer.groups
                for name, node in group.params
            },
        )
        losses.append(float(loss.value))

    profile = project_update(merge_delta(layer), basis)
    logger.debug("probe %s: loss %.3g -> %.3g", cfg.kind, losses[0], losses[-1])
    return ProbeResult(profile=profile, losses=losses, basis=basis)
