"""
Exceptions raised by geoclip.

Every error subclasses the builtin a caller would expect (``ValueError`` for
bad inputs, ``RuntimeError`` for failures during a run) and the
``GeoClipError`` marker so the CLI can report them uniformly.
"""
from typing import Optional


class GeoClipError(Exception):
    """Marker base for all geoclip errors."""


class InvalidClampError(GeoClipError, ValueError):
    """Clamp bounds with lo <= 0 or hi < lo."""


class SingularCovarianceError(GeoClipError, ValueError):
    """A covariance spectrum with a non-positive eigenvalue where one is not allowed."""


class DimensionMismatchError(GeoClipError, ValueError):
    """Array shapes that do not agree."""


class EmptyBatchError(GeoClipError, ValueError):
    """A privatization step was called with no samples."""


class InvalidOrderError(GeoClipError, ValueError):
    """An RDP order alpha <= 1."""


class InfeasibleTargetError(GeoClipError, ValueError):
    """No noise multiplier in the search bracket reaches the privacy target."""


class ConfigError(GeoClipError, ValueError):
    """Invalid configuration values or unknown keys."""


class SchemaError(GeoClipError, ValueError):
    """Invalid dataset schema file."""


class DataParseError(GeoClipError, ValueError):
    """A CSV file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f", line {line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.message = message
        self.path = path
        self.line = line

    def __reduce__(self):
        return self.__class__, (self.message, self.path, self.line)


class RowLengthError(DataParseError):
    """A CSV row with the wrong number of cells."""


class NonNumericCellError(DataParseError):
    """A CSV cell that is neither numeric nor a declared category."""


class DivergenceError(GeoClipError, RuntimeError):
    """Training produced a NaN or infinite loss or parameter."""

    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.message = message
        self.step = step

    def __reduce__(self):
        return self.__class__, (self.message, self.step)


class CheckpointError(GeoClipError, RuntimeError):
    """An estimator snapshot could not be read."""
