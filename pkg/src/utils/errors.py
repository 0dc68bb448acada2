"""
Exception hierarchy for the RAHN toolkit.

Each error carries the process exit code the CLI reports for it.
"""

from typing import Optional


class RahnError(Exception):
    """Base class for every toolkit failure."""

    exit_code: int = 1


class ConfigError(RahnError):
    """Raised when a configuration value is invalid or out of range."""

    exit_code = 2


class DataError(RahnError):
    """Raised when input data is missing, unreadable or unusable."""

    exit_code = 3


class ParseError(DataError):
    """Raised when a matrix or metadata file is malformed."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ValidationError(DataError):
    """Raised when parsed data violates a domain invariant."""


class DegenerateClusterError(DataError):
    """Raised when the reliable cluster holds no QoS observations."""


class DivergenceError(RahnError):
    """Raised when the training loss becomes non-finite."""

    exit_code = 4

    def __init__(self, message: str, last_finite_loss: Optional[float] = None) -> None:
        self.last_finite_loss = last_finite_loss
        super().__init__(f"{message} (last finite loss: {last_finite_loss})")


class CheckpointError(RahnError):
    """Raised when a checkpoint is unreadable or incompatible with the config."""

    exit_code = 5


class ShapeError(RahnError, ValueError):
    """Raised when tensor shapes do not agree."""


class IndexLookupError(RahnError, IndexError):
    """Raised when an embedding index falls outside its vocabulary."""


class OptimizerStateError(RahnError):
    """Raised when an optimizer step finds a parameter without gradient."""


class StageError(RahnError):
    """Wraps a failure inside the experiment pipeline with the stage name."""

    def __init__(self, stage: str, cause: Exception) -> None:
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"stage '{stage}' failed: {cause}")
