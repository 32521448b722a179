"""
Clipping geometry: the optimal transform basis and its eigenvalue clamping.

The transform maps a centered gradient into a basis where clipping at norm 1
and isotropic noise are optimal for the estimated gradient covariance
``Σ = U Λ Uᵀ``. For a trace budget ``γ`` the optimal transform is::

    M = s Λ^{-1/4} Uᵀ,    M⁻¹ = s⁻¹ U Λ^{1/4},    s = (γ / Σ√λ_i)^{1/2}

which minimizes the added-noise term ``Tr((MᵀM)⁻¹)`` subject to
``Tr(MᵀMΣ) = γ``. All functions here are pure.
"""
from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import linalg

from .core.errors import DimensionMismatchError, InvalidClampError, SingularCovarianceError

# Relative slack for round-off negatives in computed spectra.
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvectors (columns, d×k) and their eigenvalues.

    Pairs are stored in descending eigenvalue order; unsorted input is reordered.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.eigenvectors, dtype=float)
        vals = np.asarray(self.eigenvalues, dtype=float)
        if vecs.ndim != 2 or vals.ndim != 1 or vecs.shape[1] != vals.shape[0]:
            raise DimensionMismatchError(
                f"eigenvectors {vecs.shape} and eigenvalues {vals.shape} do not agree"
            )
        if vals.shape[0] > vecs.shape[0]:
            raise DimensionMismatchError(f"rank {vals.shape[0]} exceeds dimension {vecs.shape[0]}")
        if np.any(vals < -_NEG_TOL * max(1.0, float(np.max(np.abs(vals), initial=0.0)))):
            raise ValueError(f"eigenvalues must be nonnegative, got min {vals.min()}")
        if np.any(np.diff(vals) > 0):
            order = np.argsort(-vals, kind='stable')
            vecs, vals = vecs[:, order], vals[order]
        object.__setattr__(self, 'eigenvectors', vecs)
        object.__setattr__(self, 'eigenvalues', vals)

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    def is_orthonormal(self, tol: float = 1e-8) -> bool:
        """Check ``VᵀV = I_k`` to ``tol``."""
        gram = self.eigenvectors.T @ self.eigenvectors
        return bool(np.allclose(gram, np.eye(self.rank), atol=tol, rtol=0.0))

    def to_matrix(self) -> np.ndarray:
        """Reassemble ``V diag(λ) Vᵀ``."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    @classmethod
    def from_diagonal(cls, variances: np.ndarray) -> 'EigenPairs':
        """Standard-basis eigenpairs of ``diag(variances)``, permuted into descending order."""
        variances = np.asarray(variances, dtype=float)
        order = np.argsort(-variances, kind='stable')
        basis = np.eye(variances.shape[0])[:, order]
        return cls(basis, variances[order])


@dataclass(frozen=True)
class TransformPair:
    """The forward clipping transform (k×d), its return map (d×k) and how it was built.

    A low-rank transform may also carry a tail: the component of a centered
    gradient outside the span of ``tail_basis`` is scaled by ``tail_scale``
    and appended to the k coordinates, so clipping and noise act on all d
    directions.

    Attributes:
        forward: ``M``, maps a centered gradient into the clipping basis.
        inverse: ``M⁻¹`` for rank d, otherwise the d×k map back to gradient space.
        gamma: the trace budget ``Tr(MᵀMΣ)`` the transform was built for.
        clamp_lo: lower eigenvalue clamp ``h₁`` in effect.
        clamp_hi: upper eigenvalue clamp ``h₂`` in effect.
        eigenvalues: the (clamped) eigenvalues used, descending.
        tail_scale: scale of the orthogonal complement (0 drops it).
        tail_basis: orthonormal d×k basis whose complement is the tail.
    """

    forward: np.ndarray
    inverse: np.ndarray
    gamma: float
    clamp_lo: float
    clamp_hi: float
    eigenvalues: Optional[np.ndarray] = None
    tail_scale: float = 0.0
    tail_basis: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return self.forward.shape[0]

    @property
    def dim(self) -> int:
        return self.forward.shape[1]

    @property
    def has_tail(self) -> bool:
        return self.tail_scale > 0 and self.tail_basis is not None

    @property
    def noise_dim(self) -> int:
        """Length of the clipping-space vectors ``apply`` returns: k, or k + d with a tail."""
        return self.rank + self.dim if self.has_tail else self.rank

    def _complement(self, x: np.ndarray) -> np.ndarray:
        return x - (x @ self.tail_basis) @ self.tail_basis.T

    def apply(self, centered: np.ndarray) -> np.ndarray:
        """Map rows of centered gradients (n×d) into the clipping basis (n×k, or n×(k+d))."""
        omega = centered @ self.forward.T
        if not self.has_tail:
            return omega
        return np.concatenate([omega, self.tail_scale * self._complement(centered)], axis=-1)

    def restore(self, omega: np.ndarray) -> np.ndarray:
        """Map a vector (or rows) from the clipping basis back to gradient space."""
        if not self.has_tail:
            return omega @ self.inverse.T if np.ndim(omega) == 2 else self.inverse @ omega
        head, tail = omega[..., :self.rank], omega[..., self.rank:]
        return head @ self.inverse.T + self._complement(tail) / self.tail_scale


def eigendecompose(cov: np.ndarray, rank: Optional[int] = None) -> EigenPairs:
    """Eigendecomposition of a symmetric covariance, descending.

    The input is symmetrized as ``(Σ+Σᵀ)/2`` first; round-off negatives are set to 0.

    Args:
        cov: d×d covariance estimate.
        rank: keep only the top ``rank`` eigenpairs (default: all).

    Returns:
        The eigenpairs in descending order.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DimensionMismatchError(f"covariance must be square, got {cov.shape}")
    sym = 0.5 * (cov + cov.T)
    vals, vecs = linalg.eigh(sym)
    vals = np.maximum(vals[::-1], 0.0)
    vecs = vecs[:, ::-1]
    if rank is not None:
        vals, vecs = vals[:rank], vecs[:, :rank]
    return EigenPairs(vecs, vals)


def clamp_eigenvalues(eig: EigenPairs, lo: float, hi: float) -> EigenPairs:
    """Clamp every eigenvalue to ``[lo, hi]`` and restore descending order.

    Raises:
        InvalidClampError: if ``lo <= 0`` or ``hi < lo``.
    """
    if not lo > 0:
        raise InvalidClampError(f"lower clamp must be positive, got {lo}")
    if hi < lo:
        raise InvalidClampError(f"upper clamp {hi} is below lower clamp {lo}")
    clamped = np.clip(eig.eigenvalues, lo, hi)
    order = np.argsort(-clamped, kind='stable')
    return EigenPairs(eig.eigenvectors[:, order], clamped[order])


def _require_positive(eigenvalues: np.ndarray, gamma: float) -> None:
    if np.any(eigenvalues <= 0):
        raise SingularCovarianceError(
            f"eigenvalues must be strictly positive (clamp first), got min {eigenvalues.min()}"
        )
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


def optimal_transform(
    eig: EigenPairs,
    gamma: float = 1.0,
    clamp_lo: Optional[float] = None,
    clamp_hi: Optional[float] = None,
) -> TransformPair:
    """Build the noise-optimal clipping transform for a covariance spectrum.

    Args:
        eig: clamped eigenpairs (all eigenvalues > 0).
        gamma: trace budget ``Tr(MᵀMΣ)``.
        clamp_lo: the ``h₁`` in effect (default: smallest eigenvalue).
        clamp_hi: the ``h₂`` in effect (default: largest eigenvalue).

    Returns:
        ``forward = s Λ^{-1/4} Uᵀ`` and ``inverse = s⁻¹ U Λ^{1/4}`` with
        ``s = (γ / Σ√λ_i)^{1/2}``.

    Raises:
        SingularCovarianceError: if any eigenvalue is not strictly positive.
    """
    lam = eig.eigenvalues
    _require_positive(lam, gamma)
    scale = np.sqrt(gamma / np.sum(np.sqrt(lam)))
    quarter = lam ** 0.25
    forward = (scale / quarter)[:, None] * eig.eigenvectors.T
    inverse = eig.eigenvectors * (quarter / scale)[None, :]
    return TransformPair(
        forward=forward,
        inverse=inverse,
        gamma=float(gamma),
        clamp_lo=float(lam.min() if clamp_lo is None else clamp_lo),
        clamp_hi=float(lam.max() if clamp_hi is None else clamp_hi),
        eigenvalues=lam.copy(),
    )


def lowrank_transform(
    eig: EigenPairs,
    tail_variance: float,
    gamma: float = 1.0,
    clamp_lo: Optional[float] = None,
    clamp_hi: Optional[float] = None,
) -> TransformPair:
    """Optimal transform for ``Σ = U Λ Uᵀ + v (I − U Uᵀ)`` without forming Σ.

    The d − k tail directions share the clamped variance ``v``, so the scale
    becomes ``s = (γ / (Σ√λ_i + (d − k)√v))^{1/2}`` and the tail is multiplied
    by ``s v^{-1/4}``. With ``k = d`` this is ``optimal_transform``.

    Raises:
        SingularCovarianceError: if any eigenvalue or ``v`` is not strictly positive.
    """
    lam = eig.eigenvalues
    tail = eig.dim - eig.rank
    if tail == 0:
        return optimal_transform(eig, gamma, clamp_lo, clamp_hi)
    _require_positive(np.append(lam, tail_variance), gamma)
    total = np.sum(np.sqrt(lam)) + tail * np.sqrt(tail_variance)
    # the head gets the share of the budget its eigenvalues account for
    head = optimal_transform(eig, gamma * np.sum(np.sqrt(lam)) / total, clamp_lo, clamp_hi)
    return replace(
        head,
        gamma=float(gamma),
        tail_scale=float(np.sqrt(gamma / total) * tail_variance ** -0.25),
        tail_basis=eig.eigenvectors,
    )


def whitening_transform(eig: EigenPairs, gamma: float = 1.0) -> TransformPair:
    """The whitening transform ``(γ/k)^{1/2} Λ^{-1/2} Uᵀ`` under the same trace budget."""
    lam = eig.eigenvalues
    _require_positive(lam, gamma)
    scale = np.sqrt(gamma / lam.shape[0])
    half = np.sqrt(lam)
    return TransformPair(
        forward=(scale / half)[:, None] * eig.eigenvectors.T,
        inverse=eig.eigenvectors * (half / scale)[None, :],
        gamma=float(gamma),
        clamp_lo=float(lam.min()),
        clamp_hi=float(lam.max()),
        eigenvalues=lam.copy(),
    )


def identity_transform(dim: int) -> TransformPair:
    """``M₀ = M₀⁻¹ = I_d``, the transform in use before any gradient is observed.

    Its trace budget against ``Σ₀ = I_d`` is ``d``.
    """
    eye = np.eye(dim)
    return TransformPair(eye, eye.copy(), gamma=float(dim), clamp_lo=1.0, clamp_hi=1.0,
                         eigenvalues=np.ones(dim))


def transformed_covariance_diag(eig: EigenPairs, gamma: float = 1.0) -> np.ndarray:
    """Diagonal of ``M Σ Mᵀ`` for the optimal transform: ``γ √λ_i / Σ_j √λ_j``."""
    lam = eig.eigenvalues
    _require_positive(lam, gamma)
    roots = np.sqrt(lam)
    return gamma * roots / roots.sum()


def geoclip_objective(eigenvalues: np.ndarray, gamma: float = 1.0) -> float:
    """Closed-form optimum ``(Σ√λ_i)² / γ`` of the noise term."""
    return float(np.sum(np.sqrt(eigenvalues)) ** 2 / gamma)


def whitening_objective(eigenvalues: np.ndarray, gamma: float = 1.0) -> float:
    """Noise term of the whitening transform, ``d Σλ_i / γ``."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    return float(eigenvalues.shape[0] * np.sum(eigenvalues) / gamma)


def transform_objective(transform: TransformPair) -> float:
    """``‖M⁻¹‖_F²``, which equals ``Tr((MᵀM)⁻¹)`` for a rank-d transform."""
    return float(np.sum(transform.inverse ** 2))


def constraint_value(transform: TransformPair, cov: np.ndarray) -> float:
    """``Tr(MᵀMΣ)``."""
    return float(np.trace(transform.forward @ cov @ transform.forward.T))
