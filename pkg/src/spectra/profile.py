"""Projection of a weight update onto the singular basis of the frozen weight."""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..errors import ContractError, DimensionError
from ..tensor import Matrix, Vector, as_matrix, frobenius_norm, svd

ROUNDOFF_FACTOR = 64


@dataclass(frozen=True)
class SpectralBasis:
    U: Matrix
    S: Vector
    V: Matrix

    @classmethod
    def of(cls, W0: npt.ArrayLike) -> "SpectralBasis":
        U, S, V = svd(as_matrix(W0, "W0"))
        return cls(U, S, V)


@dataclass(frozen=True)
class SpectralProfile:
    """Diagonal-pair projections c_k = u_k^T ΔW v_k and their energy shares.

    ``cross_energy`` is ||ΔW||_F^2 minus the diagonal energy: the part of
    the update living off the (u_k, v_k) pairs.
    """

    c: Vector
    normalized: Vector
    cumulative_energy: Vector
    cross_energy: float
    delta_fro: float

    def __len__(self) -> int:
        return len(self.c)


def project_update(deltaW: npt.ArrayLike, basis: SpectralBasis) -> SpectralProfile:
    delta = as_matrix(deltaW, "deltaW")
    expected = (basis.U.shape[0], basis.V.shape[0])
    if delta.shape != expected:
        raise DimensionError(
            f"project_update: update {delta.shape} does not match basis {expected}"
        )

    fro = frobenius_norm(delta)
    # Projections within roundoff of ||ΔW||_F count as zero
    floor = ROUNDOFF_FACTOR * np.finfo(np.float64).eps * max(delta.shape) * fro

    c = np.einsum("ik,ij,jk->k", basis.U, delta, basis.V)
    peak = float(np.max(np.abs(c)))
    normalized = np.abs(c) / peak if peak > floor else np.zeros_like(c)

    energy = np.square(c)
    total = float(energy.sum())
    if total > floor * floor:
        cumulative = np.cumsum(energy) / total
        cumulative[-1] = 1.0
    else:
        cumulative = np.zeros_like(c)

    return SpectralProfile(
        c=c,
        normalized=normalized,
        cumulative_energy=cumulative,
        cross_energy=max(fro * fro - total, 0.0),
        delta_fro=fro,
    )


def principal_mass(profile: SpectralProfile, r: int) -> float:
    """Share of diagonal-projection energy in the top-r components."""
    if not 1 <= r <= len(profile):
        raise ContractError(f"principal_mass: r={r} outside [1, {len(profile)}]")
    return float(profile.cumulative_energy[r - 1])
