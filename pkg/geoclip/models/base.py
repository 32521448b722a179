"""
Base classes for models with exact per-sample gradients.
"""
from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..core.errors import ConfigError, DimensionMismatchError
from ..core.utils import as_vector


class ModelKind(str, Enum):
    """Model families the harness can train."""
    LINEAR_REGRESSION = "linear_regression"
    LOGISTIC_BINARY = "logistic_binary"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class ModelSpec:
    """Model family and sizes.

    Attributes:
        kind: model family.
        input_dim: number of input features p.
        classes: number of classes c (softmax only).
    """

    kind: ModelKind
    input_dim: int
    classes: Optional[int] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', ModelKind(self.kind))
        except ValueError:
            raise ConfigError(f"Unknown model kind {self.kind!r}") from None
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be positive, got {self.input_dim}")
        if self.kind is ModelKind.SOFTMAX:
            if self.classes is None or self.classes < 2:
                raise ConfigError(f"softmax needs at least 2 classes, got {self.classes}")
        elif self.kind is ModelKind.LOGISTIC_BINARY:
            if self.classes not in (None, 2):
                raise ConfigError(f"logistic_binary has 2 classes, got {self.classes}")
        elif self.classes is not None:
            raise ConfigError(f"linear_regression does not take classes={self.classes}")

    @property
    def num_params(self) -> int:
        """Parameter count d: ``p+1`` for the linear families, ``c(p+1)`` for softmax."""
        if self.kind is ModelKind.SOFTMAX:
            return self.classes * (self.input_dim + 1)
        return self.input_dim + 1

    @property
    def is_classifier(self) -> bool:
        return self.kind is not ModelKind.LINEAR_REGRESSION

    def to_dict(self) -> Dict[str, Any]:
        out = {"kind": self.kind.value, "input_dim": self.input_dim}
        if self.classes is not None:
            out["classes"] = self.classes
        return out


def with_bias(features: np.ndarray) -> np.ndarray:
    """Append a constant-1 column: ``x̂ = (x, 1)``."""
    return np.hstack([features, np.ones((features.shape[0], 1))])


class Model(ABC):
    """Base class for all models.

    Parameters are a flat vector ``θ`` of length ``spec.num_params``; the
    bias is the last entry of each weight block.
    """

    #: "mse" or "accuracy"
    metric_name: str = ""

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    @property
    def dim(self) -> int:
        return self.spec.num_params

    def init_params(self) -> np.ndarray:
        """Zero initialization."""
        return np.zeros(self.dim)

    def _check(self, theta, features, targets=None) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        theta = as_vector(theta, self.dim, "parameters")
        x = np.asarray(features, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise DimensionMismatchError(
                f"Expected features of shape (n, {self.spec.input_dim}), got {x.shape}"
            )
        y = None
        if targets is not None:
            y = np.asarray(targets)
            if y.shape != (x.shape[0],):
                raise DimensionMismatchError(
                    f"Expected {x.shape[0]} targets, got shape {y.shape}"
                )
        return theta, with_bias(x), y

    @abstractmethod
    def per_sample_gradients(self, theta: np.ndarray, features: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Exact gradient of each sample's loss.

        Args:
            theta: parameters (length d)
            features: n×p inputs
            targets: length-n targets

        Returns:
            n×d matrix, one gradient per row
        """
        pass

    @abstractmethod
    def per_sample_losses(self, theta: np.ndarray, features: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Loss of each sample."""
        pass

    @abstractmethod
    def predict(self, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
        """Predicted values (regression) or class labels (classification)."""
        pass

    @abstractmethod
    def metric(self, theta: np.ndarray, features: np.ndarray, targets: np.ndarray) -> float:
        """Evaluation metric: MSE, or accuracy in percent."""
        pass

    def loss(self, theta: np.ndarray, features: np.ndarray, targets: np.ndarray) -> float:
        """Mean loss over the samples."""
        losses = self.per_sample_losses(theta, features, targets)
        return float(np.mean(losses)) if losses.size else 0.0

    def better(self, a: float, b: float) -> bool:
        """Whether metric value ``a`` is strictly better than ``b``."""
        return a > b if self.spec.is_classifier else a < b
