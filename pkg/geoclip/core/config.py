"""
Configuration settings for geoclip.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import ConfigError
from .utils import set_log_level

def _default_orders() -> Tuple[float, ...]:
    return tuple(float(a) for a in np.arange(1.25, 64.0 + 1e-9, 0.25))

@dataclass
class Config:
    """Global algorithm defaults for geoclip."""
    # Estimator moving averages
    beta1: float = 0.99
    beta2: float = 0.999
    beta3: float = 0.99

    # Transform
    h1: float = 1e-15
    gamma: float = 1.0
    svd_rel_floor: float = 1e-12
    lowrank_batch_scaling: bool = True
    lowrank_tail: bool = True

    # Quantile baseline
    quantile_count_sigma: float = 10.0
    quantile_target: float = 0.5

    # Accountant
    rdp_orders: Tuple[float, ...] = field(default_factory=_default_orders)
    sigma_bracket: Tuple[float, float] = (0.3, 100.0)

    # Output settings
    output_dir: str = "output"

    # Debug settings
    debug: bool = False
    log_level: str = "INFO"

# Global configuration instance
config = Config()
set_log_level(config.log_level)

def update_config(**kwargs) -> None:
    """Update the global configuration."""
    for key, value in kwargs.items():
        if hasattr(config, key):
            setattr(config, key, value)
        else:
            raise ConfigError(f"Invalid config option: {key}")
        if key == "log_level":
            set_log_level(value)
