"""
Linear and binary logistic regression on ``x̂ = (x, 1)``.
"""
import numpy as np
from scipy.special import expit

from .base import Model


class LinearRegression(Model):
    """Squared-error regression, loss ``½(θᵀx̂ − y)²``; metric is test MSE."""

    metric_name = "mse"

    def per_sample_gradients(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        residual = xh @ theta - y.astype(float)
        return residual[:, None] * xh

    def per_sample_losses(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        return 0.5 * (xh @ theta - y.astype(float)) ** 2

    def predict(self, theta, features):
        theta, xh, _ = self._check(theta, features)
        return xh @ theta

    def metric(self, theta, features, targets):
        y = np.asarray(targets, dtype=float)
        return float(np.mean((self.predict(theta, features) - y) ** 2))


class LogisticBinary(Model):
    """Logistic regression on labels in {0, 1}; metric is accuracy in percent."""

    metric_name = "accuracy"

    def per_sample_gradients(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        return (expit(xh @ theta) - y.astype(float))[:, None] * xh

    def per_sample_losses(self, theta, features, targets):
        theta, xh, y = self._check(theta, features, targets)
        z = xh @ theta
        # −y log σ(z) − (1−y) log(1−σ(z))
        return np.logaddexp(0.0, z) - y.astype(float) * z

    def predict_proba(self, theta, features):
        theta, xh, _ = self._check(theta, features)
        return expit(xh @ theta)

    def predict(self, theta, features):
        return (self.predict_proba(theta, features) >= 0.5).astype(int)

    def metric(self, theta, features, targets):
        return float(100.0 * np.mean(self.predict(theta, features) == np.asarray(targets).astype(int)))
