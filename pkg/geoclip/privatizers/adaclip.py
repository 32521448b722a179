"""
AdaClip as the diagonal special case of GeoClip.

The covariance is replaced by its diagonal (per-coordinate moving-average
variances), so the eigenbasis is the standard basis and the optimal transform
is diagonal with entries proportional to ``λ_i^{-1/4}``. Correlations between
coordinates are ignored.
"""
from typing import Optional

import numpy as np

from ..estimator import DiagVarState
from ..geometry import EigenPairs, TransformPair, clamp_eigenvalues, optimal_transform
from .base import ClipStrategy, ClipStrategyConfig, PrivatizedGradient
from .geoclip import geoclip_step


def adaclip_transform(
    variances: np.ndarray,
    gamma: float = 1.0,
    h1: Optional[float] = None,
    h2: Optional[float] = None,
) -> TransformPair:
    """Diagonal transform for per-coordinate variances, clamped to ``[h1, h2]`` when given."""
    eig = EigenPairs.from_diagonal(variances)
    if h1 is not None:
        eig = clamp_eigenvalues(eig, h1, np.inf if h2 is None else h2)
    return optimal_transform(eig, gamma, h1, h2)


def adaclip_step(
    per_sample_grads: np.ndarray,
    variances: np.ndarray,
    mean: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    gamma: float = 1.0,
    h1: Optional[float] = None,
    h2: Optional[float] = None,
    expected_batch_size: Optional[float] = None,
) -> PrivatizedGradient:
    """GeoClip step with the covariance replaced by ``diag(variances)``."""
    return geoclip_step(per_sample_grads, adaclip_transform(variances, gamma, h1, h2), mean, sigma, rng,
                        expected_batch_size)


class AdaClipStrategy(ClipStrategy):
    """Per-coordinate adaptive clipping from moving-average variances."""

    def __init__(self, options: ClipStrategyConfig, dim: int, batch_size: int = 1):
        super().__init__(options, dim, batch_size)
        self.state = DiagVarState.initial(dim, batch_size, options.beta1, options.beta2)

    @property
    def transform(self) -> TransformPair:
        return adaclip_transform(self.state.var, self.options.gamma, self.options.h1, self.options.h2)

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        return adaclip_step(per_sample_grads, self.state.var, self.state.mean, self.sigma, rng,
                            self.options.gamma, self.options.h1, self.options.h2, self.batch_size)

    def observe(self, noisy_grad: np.ndarray) -> None:
        self.state = self.state.observe(noisy_grad)
