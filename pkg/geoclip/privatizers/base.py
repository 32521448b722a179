"""
Base classes for gradient privatization strategies.
"""
from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Type, TypeVar

import numpy as np

from ..core.config import config
from ..core.errors import ConfigError
from ..geometry import TransformPair

T = TypeVar('T')


class StrategyKind(str, Enum):
    """Clipping strategies available to the harness."""
    GEOCLIP_FULL = "geoclip_full"
    GEOCLIP_LOWRANK = "geoclip_lowrank"
    ADACLIP = "adaclip"
    QUANTILE = "quantile"
    VANILLA = "vanilla"
    NONPRIVATE = "nonprivate"


# Optional fields each kind requires; any other optional must be absent.
_REQUIRED = {
    StrategyKind.GEOCLIP_FULL: set(),
    StrategyKind.GEOCLIP_LOWRANK: {"rank"},
    StrategyKind.ADACLIP: set(),
    StrategyKind.QUANTILE: {"clip_norm", "quantile_lr"},
    StrategyKind.VANILLA: {"clip_norm"},
    StrategyKind.NONPRIVATE: set(),
}
_OPTIONAL = {"rank", "clip_norm", "quantile_lr"}


@dataclass(frozen=True)
class ClipStrategyConfig:
    """Options for a clipping strategy.

    Attributes:
        kind: which strategy to run.
        sigma: noise multiplier at clip norm 1 (or at ``clip_norm`` for the baselines).
        rank: retained eigenpairs (``geoclip_lowrank`` only).
        clip_norm: clipping threshold C (``vanilla``, initial C for ``quantile``).
        quantile_target: unclipped fraction the quantile baseline aims for
            (default from global config).
        quantile_lr: geometric step size of the quantile baseline.
        quantile_count_sigma: noise std on the unclipped count (default from global config).
        h1: lower eigenvalue clamp (default from global config).
        h2: upper eigenvalue clamp (1 and 10 work well in practice).
        gamma: trace budget of the transform (default from global config).
        beta1, beta2, beta3: estimator decays (default from global config).
    """

    kind: StrategyKind = StrategyKind.GEOCLIP_FULL
    sigma: float = 1.0
    rank: Optional[int] = None
    clip_norm: Optional[float] = None
    quantile_target: Optional[float] = None
    quantile_lr: Optional[float] = None
    quantile_count_sigma: Optional[float] = None
    h1: Optional[float] = None
    h2: float = 1.0
    gamma: Optional[float] = None
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    beta3: Optional[float] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', StrategyKind(self.kind))
        except ValueError:
            raise ConfigError(
                f"Unknown strategy kind {self.kind!r}; expected one of "
                f"{', '.join(k.value for k in StrategyKind)}"
            ) from None
        for name in ("h1", "gamma", "quantile_target"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(config, name))
        required = _REQUIRED[self.kind]
        for name in _OPTIONAL:
            present = getattr(self, name) is not None
            if name in required and not present:
                raise ConfigError(f"strategy {self.kind.value} requires {name}")
            if name not in required and present:
                raise ConfigError(f"strategy {self.kind.value} does not take {name}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if self.rank is not None and self.rank < 1:
            raise ConfigError(f"rank must be a positive integer, got {self.rank}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ConfigError(f"clip_norm must be positive, got {self.clip_norm}")
        if not 0.0 < self.quantile_target < 1.0:
            raise ConfigError(f"quantile_target must lie in (0, 1), got {self.quantile_target}")
        if self.quantile_lr is not None and not self.quantile_lr > 0:
            raise ConfigError(f"quantile_lr must be positive, got {self.quantile_lr}")
        if not (self.h1 > 0 and self.h2 >= self.h1):
            raise ConfigError(f"clamp range must satisfy 0 < h1 <= h2, got [{self.h1}, {self.h2}]")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")

    @property
    def label(self) -> str:
        """Short name used in logs and output paths."""
        if self.kind is StrategyKind.GEOCLIP_LOWRANK:
            return f"{self.kind.value}_k{self.rank}"
        return self.kind.value

    def to_dict(self) -> Dict[str, Any]:
        """Convert options to a dictionary (``None`` entries omitted)."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            out[f.name] = value.value if isinstance(value, StrategyKind) else value
        return out

    @classmethod
    def from_dict(cls: Type[T], data: Dict[str, Any]) -> T:
        """Create options from a dictionary of (possibly string) values."""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown strategy option(s): {', '.join(sorted(unknown))}")
        kwargs: Dict[str, Any] = {}
        for name, value in data.items():
            if value is None or value == "":
                continue
            if name == "kind":
                kwargs[name] = value
            elif name == "rank":
                kwargs[name] = int(value)
            else:
                kwargs[name] = float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class PrivatizedGradient:
    """One privatized gradient ``g̃`` and the fraction of samples that were clipped."""

    value: np.ndarray
    clipped_fraction: float


class Release(NamedTuple):
    """One Gaussian mechanism invocation made by a strategy step."""
    label: str
    sigma: float


def _shape(state: Any) -> str:
    return f"d={state.dim}" + (f", k={state.rank}" if hasattr(state, 'rank') else "")


class ClipStrategy(ABC):
    """Base class for all clipping strategies.

    A strategy owns whatever state it adapts (estimators, clip thresholds) and
    is driven by the training loop: ``privatize`` once per step, then
    ``observe`` with the released gradient.
    """

    def __init__(self, options: ClipStrategyConfig, dim: int, batch_size: int = 1):
        """Initialize the strategy.

        Args:
            options: strategy configuration
            dim: gradient dimension d
            batch_size: expected batch size |B|
        """
        self.options = options
        self.dim = int(dim)
        self.batch_size = int(batch_size)

    @property
    def kind(self) -> StrategyKind:
        return self.options.kind

    @property
    def sigma(self) -> float:
        return self.options.sigma

    @property
    def transform(self) -> Optional[TransformPair]:
        """The transform the next ``privatize`` call will use (``None`` if not transform-based)."""
        return None

    @abstractmethod
    def privatize(self, per_sample_grads: np.ndarray, rng: np.random.Generator) -> PrivatizedGradient:
        """Privatize one batch of per-sample gradients.

        Args:
            per_sample_grads: n×d matrix, one gradient per row
            rng: generator for this step's noise

        Returns:
            The privatized gradient
        """
        pass

    def observe(self, noisy_grad: np.ndarray) -> None:
        """Feed the released gradient back into the strategy's estimators."""

    @property
    def estimator_state(self) -> Any:
        """The adapted estimator state, or ``None`` for strategies without one."""
        return getattr(self, 'state', None)

    def resume(self, state: Any) -> None:
        """Continue from a saved estimator state.

        Raises:
            ConfigError: if the strategy keeps no estimator or ``state`` does not
                match its kind, dimension or rank.
        """
        current = self.estimator_state
        if current is None:
            raise ConfigError(f"{self.kind.value} keeps no estimator state to resume")
        if type(state) is not type(current):
            raise ConfigError(f"{self.kind.value} cannot resume from a {type(state).__name__}")
        if _shape(state) != _shape(current):
            raise ConfigError(f"estimator snapshot has {_shape(state)}, strategy expects {_shape(current)}")
        self.state = state
        self._estimator_changed()

    def _estimator_changed(self) -> None:
        """Rebuild anything derived from ``self.state``."""

    def releases(self) -> List[Release]:
        """The Gaussian releases each step makes, for privacy accounting."""
        return [Release("gradient", self.sigma), *self.side_releases(self.options)]

    @classmethod
    def side_releases(cls, options: ClipStrategyConfig) -> List[Release]:
        """Releases besides the gradient; their σ does not follow ``options.sigma``."""
        return []
