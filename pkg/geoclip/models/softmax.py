"""
Multiclass softmax regression.

``θ`` holds ``c`` blocks ``(w_i, b_i)`` of length ``p+1``; the gradient of
the cross-entropy with respect to block ``i`` is ``(p_i − 1[y = i]) x̂``.
"""
import numpy as np
from scipy.special import log_softmax, softmax

from ..core.errors import DimensionMismatchError
from .base import Model


class SoftmaxRegression(Model):
    """Cross-entropy softmax classifier; metric is accuracy in percent."""

    metric_name = "accuracy"

    def _weights(self, theta: np.ndarray) -> np.ndarray:
        return theta.reshape(self.spec.classes, self.spec.input_dim + 1)

    def _labels(self, y: np.ndarray) -> np.ndarray:
        labels = y.astype(int)
        if labels.size and (labels.min() < 0 or labels.max() >= self.spec.classes):
            raise DimensionMismatchError(
                f"class labels must lie in [0, {self.spec.classes}), "
                f"got range [{labels.min()}, {labels.max()}]"
            )
        return labels

    def per_sample_gradients(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        labels = self._labels(y)
        probs = softmax(xh @ self._weights(theta).T, axis=1)
        probs[np.arange(len(labels)), labels] -= 1.0
        return (probs[:, :, None] * xh[:, None, :]).reshape(xh.shape[0], self.dim)

    def per_sample_losses(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        labels = self._labels(y)
        logp = log_softmax(xh @ self._weights(theta).T, axis=1)
        return -logp[np.arange(len(labels)), labels]

    def predict_proba(self, theta, features):
        theta, xh, _ = self._check(theta, features)
        return softmax(xh @ self._weights(theta).T, axis=1)

    def predict(self, theta, features):
        return np.argmax(self.predict_proba(theta, features), axis=1)

    def metric(self, theta, features, targets):
        return float(100.0 * np.mean(self.predict(theta, features) == np.asarray(targets).astype(int)))
