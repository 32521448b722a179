"""
Rényi-DP accounting for the Poisson-subsampled Gaussian mechanism.

A step that adds ``N(0, σ²)`` noise to a sensitivity-1 sum over a Poisson
sample with rate ``q`` has RDP ``ρ(α)`` at order ``α``. ``T`` steps compose
to ``T·ρ(α)``, and the guarantee converts to ``(ε, δ)``-DP via::

    ε = min_α  T·ρ(α) + log(1/δ) / (α − 1)

over a fixed order grid. Integer orders use the exact binomial expansion;
fractional orders use the two-sided series with Gaussian tail terms.
Adjacency is add/remove of one example.
"""
from __future__ import annotations
import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from .core.config import config
from .core.errors import InfeasibleTargetError, InvalidOrderError
from .core.utils import logger


@dataclass(frozen=True)
class PrivacySpec:
    """``T`` releases of the subsampled Gaussian mechanism and the target δ.

    Attributes:
        sigma: noise multiplier (noise std / sensitivity).
        sample_rate: Poisson sampling rate ``q = |B|/N``.
        steps: number of releases ``T``.
        delta: target δ.
    """

    sigma: float
    sample_rate: float
    steps: int
    delta: float = 1e-5

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.sample_rate <= 1.0:
            raise ValueError(f"sample_rate must lie in (0, 1], got {self.sample_rate}")
        if self.steps < 0:
            raise ValueError(f"steps must be nonnegative, got {self.steps}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass
class EpsilonCurve:
    """ε after each listed step; ε is nondecreasing in the step index."""

    points: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        eps = [e for _, e in self.points]
        if any(b < a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon curve must be nondecreasing")

    @property
    def final(self) -> float:
        return self.points[-1][1] if self.points else 0.0

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write ``step,epsilon`` rows with one header row."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(["step", "epsilon"])
            for step, eps in self.points:
                writer.writerow([step, repr(float(eps))])
        return path


# ---------------------------------------------------------------------------
# RDP of one step
# ---------------------------------------------------------------------------

def _log_binom(n: float, k: float) -> float:
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def _log_expm1(x: float) -> float:
    """``log(exp(x) − 1)`` for ``x > 0``."""
    return x + math.log(-math.expm1(-x))


def _log_erfc(x: float) -> float:
    return math.log(2.0) + special.log_ndtr(-x * math.sqrt(2.0))


def _log_add(logx: float, logy: float) -> float:
    a, b = min(logx, logy), max(logx, logy)
    if a == -np.inf:
        return b
    return math.log1p(math.exp(a - b)) + b


def _log_sub(logx: float, logy: float) -> float:
    """``log(exp(logx) − exp(logy))`` for ``logx >= logy``."""
    if logy == -np.inf:
        return logx
    if logx == logy:
        return -np.inf
    return logx + math.log1p(-math.exp(logy - logx))


def _rdp_int(q: float, sigma: float, alpha: int) -> float:
    # A_α = Σ_k C(α,k) q^k (1−q)^{α−k} exp((k²−k)/2σ²); the k = 0, 1 terms and the
    # "−1" of every other term sum to exactly 1, so only A_α − 1 is accumulated.
    log_terms = [
        _log_binom(alpha, k) + k * math.log(q) + (alpha - k) * math.log1p(-q)
        + _log_expm1((k * k - k) / (2.0 * sigma ** 2))
        for k in range(2, alpha + 1)
    ]
    log_a_minus_1 = float(special.logsumexp(log_terms))
    return float(np.logaddexp(0.0, log_a_minus_1)) / (alpha - 1)


def _rdp_frac(q: float, sigma: float, alpha: float) -> float:
    log_a0, log_a1 = -np.inf, -np.inf
    z0 = sigma ** 2 * math.log(1.0 / q - 1.0) + 0.5
    i = 0
    while True:
        coef = special.binom(alpha, i)
        log_coef = math.log(abs(coef))
        j = alpha - i
        log_t0 = log_coef + i * math.log(q) + j * math.log1p(-q)
        log_t1 = log_coef + j * math.log(q) + i * math.log1p(-q)
        log_e0 = math.log(0.5) + _log_erfc((i - z0) / (math.sqrt(2.0) * sigma))
        log_e1 = math.log(0.5) + _log_erfc((z0 - j) / (math.sqrt(2.0) * sigma))
        log_s0 = log_t0 + (i * i - i) / (2.0 * sigma ** 2) + log_e0
        log_s1 = log_t1 + (j * j - j) / (2.0 * sigma ** 2) + log_e1
        if coef > 0:
            log_a0 = _log_add(log_a0, log_s0)
            log_a1 = _log_add(log_a1, log_s1)
        else:
            log_a0 = _log_sub(log_a0, log_s0)
            log_a1 = _log_sub(log_a1, log_s1)
        i += 1
        if max(log_s0, log_s1) < -30:
            break
    return max(0.0, _log_add(log_a0, log_a1) / (alpha - 1))


@lru_cache(maxsize=65536)
def _rdp_cached(sigma: float, q: float, alpha: float) -> float:
    if q == 1.0:
        return alpha / (2.0 * sigma ** 2)
    if float(alpha).is_integer():
        return _rdp_int(q, sigma, int(alpha))
    return _rdp_frac(q, sigma, alpha)


def rdp_subsampled_gaussian(sigma: float, q: float, alpha: float) -> float:
    """RDP at order ``alpha`` of one Poisson-subsampled Gaussian release.

    Args:
        sigma: noise multiplier (> 0).
        q: sampling rate in [0, 1].
        alpha: RDP order (> 1).

    Returns:
        ``ρ(α) >= 0``; ``α / (2σ²)`` when ``q = 1``.

    Raises:
        InvalidOrderError: if ``alpha <= 1``.
    """
    if not alpha > 1:
        raise InvalidOrderError(f"RDP order must exceed 1, got {alpha}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"sampling rate must lie in [0, 1], got {q}")
    if q == 0.0:
        return 0.0
    return _rdp_cached(float(sigma), float(q), float(alpha))


# ---------------------------------------------------------------------------
# Composition and conversion
# ---------------------------------------------------------------------------

def _orders(orders: Optional[Sequence[float]]) -> np.ndarray:
    return np.asarray(config.rdp_orders if orders is None else orders, dtype=float)


def _rdp_vector(sigma: float, q: float, orders: np.ndarray) -> np.ndarray:
    return np.array([rdp_subsampled_gaussian(sigma, q, a) for a in orders])


def _rdp_to_epsilon(rdp: np.ndarray, orders: np.ndarray, delta: float) -> float:
    eps = rdp + math.log(1.0 / delta) / (orders - 1.0)
    best = int(np.argmin(eps))
    if best in (0, len(orders) - 1) and len(orders) > 1:
        logger.warning(f"optimal RDP order {orders[best]} lies at the edge of the order grid")
    return float(max(0.0, eps[best]))


def epsilon_of(spec: PrivacySpec, orders: Optional[Sequence[float]] = None) -> float:
    """ε after ``spec.steps`` releases at ``spec.delta``; 0 for zero releases."""
    if spec.steps == 0:
        return 0.0
    grid = _orders(orders)
    return _rdp_to_epsilon(spec.steps * _rdp_vector(spec.sigma, spec.sample_rate, grid), grid, spec.delta)


def compose_heterogeneous(specs: Iterable[PrivacySpec], orders: Optional[Sequence[float]] = None,
                          delta: Optional[float] = None) -> float:
    """ε of a sequence of different releases, composed order-wise in RDP.

    Args:
        specs: releases; each contributes ``steps·ρ(α)``.
        orders: order grid (default: global config).
        delta: target δ (default: the first spec's).
    """
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one release to compose")
    delta = specs[0].delta if delta is None else delta
    if sum(s.steps for s in specs) == 0:
        return 0.0
    grid = _orders(orders)
    total = np.zeros_like(grid)
    for s in specs:
        if s.steps:
            total += s.steps * _rdp_vector(s.sigma, s.sample_rate, grid)
    return _rdp_to_epsilon(total, grid, delta)


def epsilon_curve(spec: PrivacySpec, steps: Optional[Sequence[int]] = None,
                  orders: Optional[Sequence[float]] = None) -> EpsilonCurve:
    """ε after each of ``steps`` (default: every step 0..T)."""
    steps = range(spec.steps + 1) if steps is None else steps
    grid = _orders(orders)
    per_step = _rdp_vector(spec.sigma, spec.sample_rate, grid)
    points = []
    for t in steps:
        eps = 0.0 if t == 0 else _rdp_to_epsilon(t * per_step, grid, spec.delta)
        points.append((int(t), eps))
    return EpsilonCurve(points)


def sigma_for_target(epsilon_target: float, q: float, steps: int, delta: float,
                     bracket: Optional[Tuple[float, float]] = None,
                     orders: Optional[Sequence[float]] = None,
                     fixed: Sequence[PrivacySpec] = ()) -> float:
    """Noise multiplier whose ε matches ``epsilon_target`` to 1e-3 relative (bisection).

    ``fixed`` lists releases whose σ is not searched (a quantile clipper's
    count, say); they are composed with the searched release at every
    bisection point so the match is on the whole ledger.

    Raises:
        InfeasibleTargetError: if the target is not reachable inside the bracket.
    """
    lo, hi = config.sigma_bracket if bracket is None else bracket
    if not epsilon_target > 0:
        raise InfeasibleTargetError(f"epsilon target must be positive, got {epsilon_target}")
    fixed = list(fixed)

    def eps(sigma: float) -> float:
        spec = PrivacySpec(sigma, q, steps, delta)
        if not fixed:
            return epsilon_of(spec, orders)
        return compose_heterogeneous([spec, *fixed], orders, delta)

    eps_lo, eps_hi = eps(lo), eps(hi)
    tol = 1e-3 * epsilon_target
    if eps_hi > epsilon_target + tol:
        raise InfeasibleTargetError(
            f"epsilon {epsilon_target} unreachable: even sigma={hi} gives epsilon={eps_hi:.4g}"
        )
    if eps_lo < epsilon_target - tol:
        raise InfeasibleTargetError(
            f"epsilon {epsilon_target} unreachable: sigma={lo} already gives epsilon={eps_lo:.4g}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = eps(mid)
        if abs(value - epsilon_target) <= tol:
            return mid
        # epsilon decreases as sigma grows
        if value > epsilon_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class PrivacyLedger:
    """Every Gaussian release made during a run, grouped by (label, σ, q).

    ``epsilon(delta)`` composes the ledger; ``count()`` is the audit total.
    """

    def __init__(self):
        self._entries = {}

    def record(self, label: str, sigma: float, sample_rate: float, count: int = 1) -> None:
        key = (label, float(sigma), float(sample_rate))
        self._entries[key] = self._entries.get(key, 0) + count

    def count(self, label: Optional[str] = None) -> int:
        return sum(n for (lab, _, _), n in self._entries.items() if label is None or lab == label)

    def specs(self, delta: float) -> List[PrivacySpec]:
        return [PrivacySpec(sigma, q, n, delta) for (_, sigma, q), n in sorted(self._entries.items())]

    def epsilon(self, delta: float, orders: Optional[Sequence[float]] = None) -> float:
        if not self._entries:
            return 0.0
        if any(sigma == 0 for (_, sigma, _) in self._entries):
            return math.inf
        return compose_heterogeneous(self.specs(delta), orders, delta)
