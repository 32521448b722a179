"""
GeoClip privatization: clip and noise in an estimated, geometry-aware basis.

Each step centers the per-sample gradients on the running mean ``a``, maps
them with the current transform ``M``, clips each to the unit ball, adds one
Gaussian draw to the sum and maps the average back with ``M⁻¹``::

    ω_i = M (g_i − a)
    ω̄_i = ω_i / max(1, ‖ω_i‖)
    ω̃  = (Σ_i ω̄_i + N) / |B|,   N ~ N(0, σ² I)
    g̃  = M⁻¹ ω̃ + a

The clipped sum has sensitivity 1 whatever ``a`` and ``M`` are, so ``σ`` is
the noise multiplier of the release. Under Poisson sampling ``|B|`` is the
expected batch size, never the realized one, so the divisor carries no
information about which records were drawn. The noise lives in k dimensions,
or in k + d when a low-rank transform carries a tail (the tail draw is
projected onto the complement by ``restore``). The transform is rebuilt after
every step from the released gradients only.
"""
from __future__ import annotations
from typing import Optional, Tuple

import numpy as np

from ..core.config import config
from ..core.errors import EmptyBatchError
from ..core.utils import as_rows, as_vector, logger
from ..estimator import FullCovState, LowRankState
from ..geometry import (
    TransformPair,
    clamp_eigenvalues,
    identity_transform,
    lowrank_transform,
    optimal_transform,
)
from .base import ClipStrategy, ClipStrategyConfig, PrivatizedGradient


def clip_to_unit_ball(omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Scale each row to norm at most 1.

    Returns:
        The clipped rows and a boolean mask of rows whose norm exceeded 1.
    """
    norms = np.linalg.norm(omega, axis=1)
    clipped = omega / np.maximum(1.0, norms)[:, None]
    return clipped, norms > 1.0


def geoclip_step(
    per_sample_grads: np.ndarray,
    transform: TransformPair,
    mean: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    expected_batch_size: Optional[float] = None,
) -> PrivatizedGradient:
    """Privatize a batch in the basis given by ``transform``.

    Args:
        per_sample_grads: n×d per-sample gradients.
        transform: current transform (rank k).
        mean: running mean ``a`` used for centering.
        sigma: noise multiplier.
        rng: noise generator.
        expected_batch_size: divisor of the noisy sum, ``qN`` under Poisson
            sampling; the realized batch length when omitted.

    Raises:
        EmptyBatchError: if the batch is empty.
        DimensionMismatchError: if shapes disagree with the transform.
    """
    grads = as_rows(per_sample_grads, transform.dim, "per-sample gradients")
    n = grads.shape[0]
    if n == 0:
        raise EmptyBatchError("cannot privatize an empty batch")
    mean = as_vector(mean, transform.dim, "mean")

    clipped, was_clipped = clip_to_unit_ball(transform.apply(grads - mean))
    noise = sigma * rng.standard_normal(transform.noise_dim)
    omega_tilde = (clipped.sum(axis=0) + noise) / (expected_batch_size or n)
    return PrivatizedGradient(
        value=transform.restore(omega_tilde) + mean,
        clipped_fraction=float(np.mean(was_clipped)),
    )


def noise_for_budget(sigma: float, transform: TransformPair) -> float:
    """Expected squared norm of the noise added in gradient space, ``σ² ‖M⁻¹‖_F²``.

    For a rank-d transform this is ``σ² Tr((MᵀM)⁻¹) = σ² (Σ√λ_i)² / γ``; a tail
    adds ``(d − k) / c²`` for tail scale ``c``.
    """
    total = np.sum(transform.inverse ** 2)
    if transform.has_tail:
        total += (transform.dim - transform.rank) / transform.tail_scale ** 2
    return float(sigma ** 2 * total)


class GeoClipFullStrategy(ClipStrategy):
    """GeoClip with a full-matrix moving-average covariance."""

    def __init__(self, options: ClipStrategyConfig, dim: int, batch_size: int = 1):
        super().__init__(options, dim, batch_size)
        self.state = FullCovState.initial(dim, batch_size, options.beta1, options.beta2)
        self._transform = identity_transform(dim)

    @property
    def transform(self) -> TransformPair:
        return self._transform

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        return geoclip_step(per_sample_grads, self._transform, self.state.mean, self.sigma, rng,
                            self.batch_size)

    def observe(self, noisy_grad: np.ndarray) -> None:
        self.state = self.state.observe(noisy_grad)
        self._estimator_changed()

    def _estimator_changed(self) -> None:
        eig = clamp_eigenvalues(self.state.eigenpairs(), self.options.h1, self.options.h2)
        self._transform = optimal_transform(eig, self.options.gamma, self.options.h1, self.options.h2)
        if config.debug:
            logger.debug(f"geoclip_full step {self.state.steps}: "
                         f"lambda in [{eig.eigenvalues[-1]:.3g}, {eig.eigenvalues[0]:.3g}]")


class GeoClipLowRankStrategy(ClipStrategy):
    """GeoClip with a streaming rank-k eigenspace.

    The k retained directions get their own scales; the remaining d − k share
    the tail variance. With ``config.lowrank_tail`` off the tail is dropped and
    noise is drawn in k dimensions only, which confines every release to the
    span of the initial basis.
    """

    def __init__(self, options: ClipStrategyConfig, dim: int, batch_size: int = 1):
        super().__init__(options, dim, batch_size)
        scaling = batch_size if config.lowrank_batch_scaling else 1
        self.state = LowRankState.initial(dim, options.rank, scaling, options.beta1, options.beta3)
        self._transform = self._build_transform()

    def _build_transform(self) -> TransformPair:
        h1, h2 = self.options.h1, self.options.h2
        eig = clamp_eigenvalues(self.state.eigenpairs(), h1, h2)
        if not config.lowrank_tail:
            return optimal_transform(eig, self.options.gamma, h1, h2)
        tail = float(np.clip(self.state.tail_variance, h1, h2))
        return lowrank_transform(eig, tail, self.options.gamma, h1, h2)

    @property
    def transform(self) -> TransformPair:
        return self._transform

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        return geoclip_step(per_sample_grads, self._transform, self.state.mean, self.sigma, rng,
                            self.batch_size)

    def observe(self, noisy_grad: np.ndarray) -> None:
        self.state = self.state.observe(noisy_grad)
        self._estimator_changed()

    def _estimator_changed(self) -> None:
        self._transform = self._build_transform()
