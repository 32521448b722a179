"""
Core functionality for geoclip.

Global configuration, the package logger and the exception types shared by
every other module.
"""

from .config import Config, config, update_config
from .errors import (
    GeoClipError,
    InvalidClampError,
    SingularCovarianceError,
    DimensionMismatchError,
    EmptyBatchError,
    InvalidOrderError,
    InfeasibleTargetError,
    ConfigError,
    SchemaError,
    DataParseError,
    RowLengthError,
    NonNumericCellError,
    DivergenceError,
    CheckpointError,
)
from .utils import logger, make_rng

__all__ = [
    'Config',
    'config',
    'update_config',
    'logger',
    'make_rng',
    'GeoClipError',
    'InvalidClampError',
    'SingularCovarianceError',
    'DimensionMismatchError',
    'EmptyBatchError',
    'InvalidOrderError',
    'InfeasibleTargetError',
    'ConfigError',
    'SchemaError',
    'DataParseError',
    'RowLengthError',
    'NonNumericCellError',
    'DivergenceError',
    'CheckpointError',
]
