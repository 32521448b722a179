"""
Models with exact per-sample gradients.
"""

import numpy as np

from .base import Model, ModelKind, ModelSpec, with_bias
from .linear import LinearRegression, LogisticBinary
from .softmax import SoftmaxRegression

_MODELS = {
    ModelKind.LINEAR_REGRESSION: LinearRegression,
    ModelKind.LOGISTIC_BINARY: LogisticBinary,
    ModelKind.SOFTMAX: SoftmaxRegression,
}


def make_model(spec: ModelSpec) -> Model:
    """Instantiate the model named by ``spec.kind``."""
    return _MODELS[spec.kind](spec)


def per_sample_gradient(spec: ModelSpec, theta: np.ndarray, features: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """n×d matrix of exact per-sample gradients of ``spec``'s loss at ``theta``."""
    return make_model(spec).per_sample_gradients(theta, features, targets)


__all__ = [
    'Model',
    'ModelKind',
    'ModelSpec',
    'LinearRegression',
    'LogisticBinary',
    'SoftmaxRegression',
    'make_model',
    'per_sample_gradient',
    'with_bias',
]
