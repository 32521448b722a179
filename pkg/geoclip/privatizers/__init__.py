"""
Gradient privatization strategies for geoclip.

Every strategy consumes a batch of per-sample gradients and emits a
``PrivatizedGradient``; the harness swaps them by configuration alone.
"""
from typing import List

from .base import ClipStrategy, ClipStrategyConfig, PrivatizedGradient, Release, StrategyKind
from .geoclip import (
    GeoClipFullStrategy,
    GeoClipLowRankStrategy,
    clip_to_unit_ball,
    geoclip_step,
    noise_for_budget,
)
from .vanilla import NonPrivateStrategy, VanillaStrategy, vanilla_step
from .adaclip import AdaClipStrategy, adaclip_step, adaclip_transform
from .quantile import QuantileClipState, QuantileStrategy, quantile_step

_STRATEGIES = {
    StrategyKind.GEOCLIP_FULL: GeoClipFullStrategy,
    StrategyKind.GEOCLIP_LOWRANK: GeoClipLowRankStrategy,
    StrategyKind.ADACLIP: AdaClipStrategy,
    StrategyKind.QUANTILE: QuantileStrategy,
    StrategyKind.VANILLA: VanillaStrategy,
    StrategyKind.NONPRIVATE: NonPrivateStrategy,
}


def make_strategy(options: ClipStrategyConfig, dim: int, batch_size: int = 1) -> ClipStrategy:
    """Instantiate the strategy named by ``options.kind``."""
    return _STRATEGIES[options.kind](options, dim, batch_size)


def side_releases(options: ClipStrategyConfig) -> List[Release]:
    """Per-step releases of ``options.kind`` other than the gradient, without building it."""
    return _STRATEGIES[options.kind].side_releases(options)


__all__ = [
    'ClipStrategy',
    'ClipStrategyConfig',
    'PrivatizedGradient',
    'Release',
    'StrategyKind',
    'GeoClipFullStrategy',
    'GeoClipLowRankStrategy',
    'AdaClipStrategy',
    'QuantileStrategy',
    'VanillaStrategy',
    'NonPrivateStrategy',
    'QuantileClipState',
    'clip_to_unit_ball',
    'geoclip_step',
    'vanilla_step',
    'adaclip_step',
    'adaclip_transform',
    'quantile_step',
    'noise_for_budget',
    'make_strategy',
    'side_releases',
]
