"""
Quantile-based adaptive clipping.

Runs standard DP-SGD with the current threshold C, then moves C
geometrically toward the target quantile of per-sample gradient norms::

    b̂ = (#{i : ‖g_i‖ ≤ C} + N(0, σ_b²)) / expected batch size
    C ← C · exp(−η_C (b̂ − q_target))

The noised count is a second Gaussian release with sensitivity 1 and noise
multiplier σ_b; it is accounted alongside the gradient release.
"""
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from ..core.config import config
from ..core.errors import EmptyBatchError
from .base import ClipStrategy, ClipStrategyConfig, PrivatizedGradient, Release
from .vanilla import vanilla_step


@dataclass(frozen=True)
class QuantileClipState:
    """Current clip norm and the parameters of its update."""

    clip_norm: float
    learning_rate: float
    target: float = 0.5
    count_sigma: float = 10.0
    expected_batch_size: Optional[float] = None

    def __post_init__(self):
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


def quantile_step(
    per_sample_grads: np.ndarray,
    clip_state: QuantileClipState,
    sigma: float,
    rng: np.random.Generator,
) -> Tuple[PrivatizedGradient, QuantileClipState]:
    """DP-SGD step at the current C followed by the private geometric update of C.

    Returns:
        The privatized gradient and the updated clip state.
    """
    grads = np.asarray(per_sample_grads, dtype=float)
    if grads.size == 0:
        raise EmptyBatchError("cannot privatize an empty batch")
    privatized = vanilla_step(grads, clip_state.clip_norm, sigma, rng, clip_state.expected_batch_size)

    norms = np.linalg.norm(grads.reshape(grads.shape[0], -1), axis=1)
    unclipped = float(np.sum(norms <= clip_state.clip_norm))
    noisy_count = unclipped + clip_state.count_sigma * rng.standard_normal()
    denom = clip_state.expected_batch_size or grads.shape[0]
    fraction = noisy_count / denom

    new_clip = clip_state.clip_norm * np.exp(-clip_state.learning_rate * (fraction - clip_state.target))
    return privatized, replace(clip_state, clip_norm=float(new_clip))


class QuantileStrategy(ClipStrategy):
    """DP-SGD whose clip norm tracks a private quantile of gradient norms."""

    def __init__(self, options: ClipStrategyConfig, dim: int, batch_size: int = 1):
        super().__init__(options, dim, batch_size)
        self.clip_state = QuantileClipState(
            clip_norm=options.clip_norm,
            learning_rate=options.quantile_lr,
            target=options.quantile_target,
            count_sigma=self.side_releases(options)[0].sigma,
            expected_batch_size=float(batch_size),
        )

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        privatized, self.clip_state = quantile_step(per_sample_grads, self.clip_state, self.sigma, rng)
        return privatized

    @classmethod
    def side_releases(cls, options: ClipStrategyConfig) -> List[Release]:
        count_sigma = options.quantile_count_sigma
        return [Release("clipped_count", config.quantile_count_sigma if count_sigma is None else count_sigma)]
