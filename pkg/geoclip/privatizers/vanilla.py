"""
Standard DP-SGD: clip each per-sample gradient to a fixed norm C in the
original basis and add ``N(0, σ²C²I)`` to the sum.
"""
from typing import List, Optional

import numpy as np

from ..core.errors import EmptyBatchError
from ..core.utils import as_rows
from .base import ClipStrategy, PrivatizedGradient, Release


def clip_rows(grads: np.ndarray, clip_norm: float):
    """Scale rows to norm at most ``clip_norm``; also return the clipped mask."""
    norms = np.linalg.norm(grads, axis=1)
    return grads / np.maximum(1.0, norms / clip_norm)[:, None], norms > clip_norm


def vanilla_step(
    per_sample_grads: np.ndarray,
    clip_norm: float,
    sigma: float,
    rng: np.random.Generator,
    expected_batch_size: Optional[float] = None,
) -> PrivatizedGradient:
    """``(Σ_i g_i min(1, C/‖g_i‖) + N) / |B|`` with ``N ~ N(0, σ²C²I_d)``.

    ``|B|`` is ``expected_batch_size`` when given, else the realized batch length.
    """
    if not clip_norm > 0:
        raise ValueError(f"clip_norm must be positive, got {clip_norm}")
    grads = np.asarray(per_sample_grads, dtype=float)
    if grads.size == 0:
        raise EmptyBatchError("cannot privatize an empty batch")
    grads = as_rows(grads, grads.shape[-1], "per-sample gradients")
    n, d = grads.shape
    clipped, was_clipped = clip_rows(grads, clip_norm)
    noise = sigma * clip_norm * rng.standard_normal(d)
    return PrivatizedGradient(
        value=(clipped.sum(axis=0) + noise) / (expected_batch_size or n),
        clipped_fraction=float(np.mean(was_clipped)),
    )


class VanillaStrategy(ClipStrategy):
    """DP-SGD with a fixed clip norm."""

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        return vanilla_step(per_sample_grads, self.options.clip_norm, self.sigma, rng, self.batch_size)


class NonPrivateStrategy(ClipStrategy):
    """Plain mini-batch SGD; used as the non-private reference run."""

    def privatize(self, per_sample_grads, rng) -> PrivatizedGradient:
        grads = as_rows(per_sample_grads, self.dim, "per-sample gradients")
        if grads.shape[0] == 0:
            raise EmptyBatchError("cannot average an empty batch")
        return PrivatizedGradient(value=grads.mean(axis=0), clipped_fraction=0.0)

    def releases(self) -> List[Release]:
        return []
