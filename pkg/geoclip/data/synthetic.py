"""
Synthetic benchmark generators.

The first ``corr_block`` features share one latent factor::

    x_j = ρ z + √(1 − ρ²) ε_j

so any two of them have correlation ``ρ²``; the remaining features are
independent standard normals. The signal ``Xw`` (random ``w``) is scaled to
unit standard deviation before Gaussian noise of std ``noise`` is added.
"""
import numpy as np

from ..core.utils import make_rng
from .dataset import CLASSIFICATION, REGRESSION, Dataset


def _features(rng: np.random.Generator, n: int, p: int, corr_block: int, rho: float) -> np.ndarray:
    if not 0 <= corr_block <= p:
        raise ValueError(f"corr_block must lie in [0, {p}], got {corr_block}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    z = rng.standard_normal(n)
    x = rng.standard_normal((n, p))
    x[:, :corr_block] = rho * z[:, None] + np.sqrt(1.0 - rho ** 2) * x[:, :corr_block]
    return x


def _noisy_signal(rng: np.random.Generator, x: np.ndarray, noise: float) -> np.ndarray:
    w = rng.standard_normal(x.shape[1])
    signal = x @ w
    signal = signal / signal.std()
    return signal + noise * rng.standard_normal(x.shape[0])


def gen_synthetic_regression(n: int = 20000, p: int = 10, corr_block: int = 5, seed: int = 0,
                             rho: float = 0.8, noise: float = 0.1) -> Dataset:
    """Gaussian features with one correlated block and a noisy linear target."""
    rng = make_rng(seed)
    x = _features(rng, n, p, corr_block, rho)
    return Dataset(f"synthetic_regression_p{p}", x, _noisy_signal(rng, x, noise), REGRESSION)


def gen_synthetic_classification(n: int = 20000, p: int = 400, corr_block: int = 50, seed: int = 0,
                                 rho: float = 0.8, noise: float = 0.1) -> Dataset:
    """As ``gen_synthetic_regression`` with labels ``1[sigmoid(signal + noise) ≥ 0.5]``."""
    rng = make_rng(seed)
    x = _features(rng, n, p, corr_block, rho)
    # sigmoid(t) >= 0.5 exactly when t >= 0
    labels = (_noisy_signal(rng, x, noise) >= 0.0).astype(int)
    return Dataset(f"synthetic_classification_p{p}", x, labels, CLASSIFICATION, num_classes=2)
