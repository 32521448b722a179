"""
Running estimates of the mean and covariance of privatized gradients.

Three estimators feed the clipping transforms:

- ``FullCovState``: exponential moving averages of the mean and the full d×d
  covariance. The covariance residual uses the mean from *before* the
  current step's mean update.
- ``LowRankState``: the mean plus the top-k eigenpairs of the exponentially
  weighted covariance, maintained by a thin SVD of a d×(k+1) factor, and one
  shared variance for the d − k directions outside them. The residual uses
  the mean from *after* the current step's mean update. No d×d matrix is
  ever formed.
- ``DiagVarState``: the per-coordinate variances only (the diagonal of the
  full estimate), used by AdaClip.

The covariance residuals are scaled by the batch size because privatized
batch averages have a covariance roughly ``1/|B|`` that of single gradients.

States are updated sequentially by a single training loop; every update
returns a new state object.
"""
from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg

from .core.config import config
from .core.errors import DimensionMismatchError
from .core.utils import as_vector
from .geometry import EigenPairs, eigendecompose


def _coerce_arrays(state) -> None:
    for name in ("mean", "cov", "var", "basis", "eigenvalues"):
        if hasattr(state, name):
            object.__setattr__(state, name, np.asarray(getattr(state, name), dtype=float))


def _check_beta(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")


def update_mean(mean: np.ndarray, noisy_grad: np.ndarray, beta1: float) -> np.ndarray:
    """``β₁ a + (1 − β₁) g̃``."""
    mean = np.asarray(mean, dtype=float)
    noisy_grad = as_vector(noisy_grad, mean.shape[0], "noisy gradient")
    return beta1 * mean + (1.0 - beta1) * noisy_grad


def batch_effective_residual(noisy_grad: np.ndarray, mean: np.ndarray, batch_size: int) -> np.ndarray:
    """``√|B| (g̃ − a)``, so a rank-1 update ``(1−β) r rᵀ`` carries the batch scaling."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    return np.sqrt(batch_size) * (np.asarray(noisy_grad, dtype=float) - np.asarray(mean, dtype=float))


@dataclass(frozen=True)
class FullCovState:
    """Moving-average mean ``a`` and covariance ``Σ`` of privatized gradients."""

    mean: np.ndarray
    cov: np.ndarray
    beta1: float = 0.99
    beta2: float = 0.999
    batch_size: int = 1
    steps: int = 0

    def __post_init__(self):
        _coerce_arrays(self)
        _check_beta("beta1", self.beta1)
        _check_beta("beta2", self.beta2)
        d = np.shape(self.mean)[0]
        if np.shape(self.cov) != (d, d):
            raise DimensionMismatchError(f"cov must be {d}x{d}, got {np.shape(self.cov)}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def initial(cls, dim: int, batch_size: int = 1,
                beta1: Optional[float] = None, beta2: Optional[float] = None) -> 'FullCovState':
        """``a₀ = 0``, ``Σ₀ = I_d``."""
        return cls(
            mean=np.zeros(dim),
            cov=np.eye(dim),
            beta1=config.beta1 if beta1 is None else beta1,
            beta2=config.beta2 if beta2 is None else beta2,
            batch_size=batch_size,
        )

    def observe(self, noisy_grad: np.ndarray) -> 'FullCovState':
        """One estimator step: covariance with the old mean, then the mean."""
        updated = update_cov_full(self, noisy_grad)
        return replace(updated, mean=update_mean(self.mean, noisy_grad, self.beta1), steps=self.steps + 1)

    def eigenpairs(self) -> EigenPairs:
        return eigendecompose(self.cov)


def update_cov_full(state: FullCovState, noisy_grad: np.ndarray) -> FullCovState:
    """``Σ ← β₂ Σ + |B| (1 − β₂)(g̃ − a)(g̃ − a)ᵀ`` with ``a`` the state's current mean.

    Only the covariance changes; the mean is left for ``update_mean``.
    """
    residual = as_vector(noisy_grad, state.dim, "noisy gradient") - state.mean
    cov = state.beta2 * state.cov + state.batch_size * (1.0 - state.beta2) * np.outer(residual, residual)
    return replace(state, cov=0.5 * (cov + cov.T))


@dataclass(frozen=True)
class DiagVarState:
    """Moving-average mean and per-coordinate variances (diagonal of the full estimate)."""

    mean: np.ndarray
    var: np.ndarray
    beta1: float = 0.99
    beta2: float = 0.999
    batch_size: int = 1
    steps: int = 0

    def __post_init__(self):
        _coerce_arrays(self)
        _check_beta("beta1", self.beta1)
        _check_beta("beta2", self.beta2)
        if np.shape(self.var) != np.shape(self.mean):
            raise DimensionMismatchError(f"var shape {np.shape(self.var)} != mean shape {np.shape(self.mean)}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def initial(cls, dim: int, batch_size: int = 1,
                beta1: Optional[float] = None, beta2: Optional[float] = None) -> 'DiagVarState':
        return cls(
            mean=np.zeros(dim),
            var=np.ones(dim),
            beta1=config.beta1 if beta1 is None else beta1,
            beta2=config.beta2 if beta2 is None else beta2,
            batch_size=batch_size,
        )

    def observe(self, noisy_grad: np.ndarray) -> 'DiagVarState':
        residual = as_vector(noisy_grad, self.dim, "noisy gradient") - self.mean
        var = self.beta2 * self.var + self.batch_size * (1.0 - self.beta2) * residual ** 2
        return replace(self, var=var, mean=update_mean(self.mean, noisy_grad, self.beta1), steps=self.steps + 1)


@dataclass(frozen=True)
class LowRankState:
    """Moving-average mean plus the top-k eigenpairs ``(U, Λ)`` of the covariance.

    Attributes:
        mean: ``a``, length d.
        basis: ``U``, d×k with orthonormal columns.
        eigenvalues: ``Λ``, length k, descending.
        beta1: mean decay.
        beta3: covariance decay.
        batch_size: residual scaling ``|B|`` (1 disables it).
        steps: number of observed gradients.
        tail_variance: ``v``, the mean variance per direction outside ``U``.
    """

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    beta1: float = 0.99
    beta3: float = 0.99
    batch_size: int = 1
    steps: int = 0
    tail_variance: float = 1.0

    def __post_init__(self):
        _coerce_arrays(self)
        _check_beta("beta1", self.beta1)
        _check_beta("beta3", self.beta3)
        if not self.tail_variance >= 0:
            raise ValueError(f"tail_variance must be nonnegative, got {self.tail_variance}")
        d = np.shape(self.mean)[0]
        k = np.shape(self.eigenvalues)[0]
        if k > d:
            raise DimensionMismatchError(f"rank {k} exceeds dimension {d}")
        if np.shape(self.basis) != (d, k):
            raise DimensionMismatchError(f"basis must be {d}x{k}, got {np.shape(self.basis)}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    @classmethod
    def initial(cls, dim: int, rank: int, batch_size: int = 1,
                beta1: Optional[float] = None, beta3: Optional[float] = None) -> 'LowRankState':
        """``a₀ = 0``, ``U₀ = [e₁, …, e_k]``, ``Λ₀ = I_k``, ``v₀ = 1``."""
        if rank > dim:
            raise DimensionMismatchError(f"rank {rank} exceeds dimension {dim}")
        return cls(
            mean=np.zeros(dim),
            basis=np.eye(dim, rank),
            eigenvalues=np.ones(rank),
            beta1=config.beta1 if beta1 is None else beta1,
            beta3=config.beta3 if beta3 is None else beta3,
            batch_size=batch_size,
        )

    def observe(self, noisy_grad: np.ndarray) -> 'LowRankState':
        """One estimator step: the mean first, then the eigenspace centered on the new mean."""
        moved = replace(self, mean=update_mean(self.mean, noisy_grad, self.beta1))
        return replace(streaming_rank_k_update(moved, noisy_grad), steps=self.steps + 1)

    def eigenpairs(self) -> EigenPairs:
        return EigenPairs(self.basis, self.eigenvalues)


def streaming_rank_k_update(state: LowRankState, noisy_grad: np.ndarray) -> LowRankState:
    """Top-k eigenpairs of ``β₃ U Λ Uᵀ + (1 − β₃) z zᵀ``, ``z = g̃ − a``.

    ``a`` is the state's mean, which the caller has already moved to the
    current step. With ``batch_size > 1`` the residual is scaled by ``√|B|``.
    The update factors the surrogate as ``Z Zᵀ`` with the d×(k+1) matrix
    ``Z = [U z] diag(√(β₃λ₁), …, √(β₃λ_k), √(1−β₃))`` and keeps the first k
    left singular vectors of ``Z`` and their squared singular values; cost is
    O(dk² + k³).

    The energy of the dropped (k+1)-th direction joins the tail,
    ``v ← β₃ v + σ²_{k+1} / (d − k)``, so the trace of the model
    ``U Λ Uᵀ + v (I − U Uᵀ)`` follows the exponentially weighted trace.
    """
    g = as_vector(noisy_grad, state.dim, "noisy gradient")
    z = batch_effective_residual(g, state.mean, state.batch_size)
    weights = np.sqrt(np.concatenate([state.beta3 * state.eigenvalues, [1.0 - state.beta3]]))
    factor = np.column_stack([state.basis, z]) * weights[None, :]
    left, singular, _ = linalg.svd(factor, full_matrices=False)
    if singular.size and singular[0] > 0:
        singular = np.where(singular < config.svd_rel_floor * singular[0], 0.0, singular)
    k = state.rank
    tail = state.tail_variance
    if state.dim > k:
        dropped = singular[k] ** 2 if singular.size > k else 0.0
        tail = state.beta3 * tail + dropped / (state.dim - k)
    return replace(state, basis=left[:, :k].copy(), eigenvalues=singular[:k] ** 2, tail_variance=float(tail))
