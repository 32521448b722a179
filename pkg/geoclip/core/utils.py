"""
Utility functions for geoclip.
"""
import logging
from pathlib import Path
from typing import Any, Type, TypeVar

import numpy as np

from .errors import DimensionMismatchError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("geoclip")

T = TypeVar('T')

def ensure_dir(path: str) -> Path:
    """Ensure that a directory exists, create it if it doesn't."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p

def set_log_level(level: str) -> None:
    """Set the level of the package logger (e.g. ``"DEBUG"``)."""
    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")
    logger.setLevel(numeric)

def validate_type(value: Any, expected_type: Type[T], param_name: str) -> T:
    """Validate that a value is of the expected type."""
    if not isinstance(value, expected_type):
        raise TypeError(
            f"Expected {param_name} to be of type {expected_type.__name__}, "
            f"got {type(value).__name__} instead"
        )
    return value

def as_vector(value: Any, dim: int, param_name: str) -> np.ndarray:
    """Convert ``value`` to a float vector of length ``dim``."""
    vec = np.asarray(value, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != dim:
        raise DimensionMismatchError(
            f"Expected {param_name} to have shape ({dim},), got {vec.shape}"
        )
    return vec

def as_rows(value: Any, dim: int, param_name: str) -> np.ndarray:
    """Convert a batch of vectors to an (n, dim) float matrix."""
    rows = np.asarray(value, dtype=float)
    if rows.ndim == 1 and rows.shape[0] == 0:
        rows = rows.reshape(0, dim)
    if rows.ndim != 2 or rows.shape[1] != dim:
        raise DimensionMismatchError(
            f"Expected {param_name} to have shape (n, {dim}), got {rows.shape}"
        )
    return rows

def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Derive an independent generator from a run seed and a stream key.

    The key is typically ``(stream_id, step)`` so every draw in a run is
    reproducible from ``(seed, config)`` alone, regardless of call order.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream)))
