"""
In-memory datasets, train/val/test splits and train-only preprocessing.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from sklearn.preprocessing import StandardScaler

from ..core.errors import DimensionMismatchError
from ..core.utils import make_rng

REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Dataset:
    """Features, targets and the preprocessing applied so far.

    Attributes:
        name: dataset name used in logs and outputs.
        features: n×p matrix.
        targets: length-n reals (regression) or integer labels (classification).
        task: ``"regression"`` or ``"classification"``.
        num_classes: number of classes (classification only).
        feature_mean, feature_std: standardization fitted on the training split.
        target_min, target_max: min-max target scaling fitted on the training split.
    """

    name: str
    features: np.ndarray
    targets: np.ndarray
    task: str = REGRESSION
    num_classes: Optional[int] = None
    feature_mean: Optional[np.ndarray] = None
    feature_std: Optional[np.ndarray] = None
    target_min: Optional[float] = None
    target_max: Optional[float] = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatchError(f"features must be a matrix, got shape {x.shape}")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"task must be '{REGRESSION}' or '{CLASSIFICATION}', got {self.task!r}")
        y = np.asarray(self.targets, dtype=int if self.task == CLASSIFICATION else float)
        if y.shape != (x.shape[0],):
            raise DimensionMismatchError(f"expected {x.shape[0]} targets, got shape {y.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"dataset {self.name!r} contains NaN or infinite values")
        object.__setattr__(self, 'features', x)
        object.__setattr__(self, 'targets', y)
        if self.task == CLASSIFICATION and self.num_classes is None:
            object.__setattr__(self, 'num_classes', int(y.max()) + 1 if y.size else 2)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def take(self, indices: np.ndarray) -> "Dataset":
        """Rows ``indices`` with the same metadata."""
        return replace(self, features=self.features[indices], targets=self.targets[indices])


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions and the seed of the shuffle."""

    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split fractions must be nonnegative")
        if not math.isclose(self.train + self.val + self.test, 1.0, abs_tol=1e-9):
            raise ValueError(
                f"split fractions must sum to 1, got {self.train + self.val + self.test}"
            )

    def sizes(self, n: int) -> Tuple[int, int, int]:
        """Train and validation sizes are floored; the test split takes the remainder."""
        n_train = int(math.floor(self.train * n + 1e-9))
        n_val = int(math.floor(self.val * n + 1e-9))
        return n_train, n_val, n - n_train - n_val


def split(dataset: Dataset, spec: SplitSpec = SplitSpec()) -> Tuple[Dataset, Dataset, Dataset]:
    """Shuffle with ``spec.seed`` and cut into disjoint train/val/test datasets."""
    if dataset.n < 10:
        raise ValueError(f"need at least 10 samples to split, got {dataset.n}")
    n_train, n_val, _ = spec.sizes(dataset.n)
    order = make_rng(spec.seed).permutation(dataset.n)
    return (
        dataset.take(order[:n_train]),
        dataset.take(order[n_train:n_train + n_val]),
        dataset.take(order[n_train + n_val:]),
    )


def standardize(train: Dataset, *others: Dataset) -> Tuple[Dataset, ...]:
    """Scale features to zero mean and unit variance using training statistics only."""
    scaler = StandardScaler().fit(train.features)
    meta = dict(feature_mean=scaler.mean_.copy(), feature_std=scaler.scale_.copy())
    return tuple(
        replace(ds, features=scaler.transform(ds.features), **meta)
        for ds in (train,) + others
    )


def scale_targets(train: Dataset, *others: Dataset) -> Tuple[Dataset, ...]:
    """Min-max scale regression targets with the training range (train lands in [0, 1])."""
    lo, hi = float(train.targets.min()), float(train.targets.max())
    width = hi - lo if hi > lo else 1.0
    return tuple(
        replace(ds, targets=(ds.targets - lo) / width, target_min=lo, target_max=hi)
        for ds in (train,) + others
    )


def prepare(dataset: Dataset, spec: SplitSpec = SplitSpec(),
            minmax_targets: bool = False) -> Tuple[Dataset, Dataset, Dataset]:
    """Split, standardize features, and optionally min-max scale targets."""
    parts = standardize(*split(dataset, spec))
    if minmax_targets:
        if dataset.task != REGRESSION:
            raise ValueError("target scaling applies to regression datasets only")
        parts = scale_targets(*parts)
    return parts
