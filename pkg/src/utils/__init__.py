"""
Utility functions for the RAHN toolkit.
"""

from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    DegenerateClusterError,
    DivergenceError,
    IndexLookupError,
    OptimizerStateError,
    ParseError,
    RahnError,
    ShapeError,
    StageError,
    ValidationError,
)
from .io import atomic_write_bytes, atomic_write_csv, atomic_write_json, atomic_write_text
from .logger import RahnLogger, configure_logging, get_logger, reset_loggers

__all__ = [
    # Errors
    "RahnError",
    "ConfigError",
    "DataError",
    "ParseError",
    "ValidationError",
    "DegenerateClusterError",
    "DivergenceError",
    "CheckpointError",
    "ShapeError",
    "IndexLookupError",
    "OptimizerStateError",
    "StageError",
    # Atomic output
    "atomic_write_bytes",
    "atomic_write_text",
    "atomic_write_json",
    "atomic_write_csv",
    # Logging
    "RahnLogger",
    "configure_logging",
    "get_logger",
    "reset_loggers",
]
