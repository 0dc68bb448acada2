"""
Atomic file output.

Every artifact is written to a temporary file in its destination directory
and renamed into place, so a failed command never leaves partial output.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

import pandas as pd

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """
    Write bytes to path atomically.

    Args:
        path: Destination file
        data: Payload

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write UTF-8 text atomically."""
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, payload: Any) -> Path:
    """Write JSON (sorted keys, 2-space indent) atomically."""
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def atomic_write_csv(path: PathLike, frame: pd.DataFrame, float_format: str = "%.17g") -> Path:
    """Write a DataFrame as CSV (no index column) atomically."""
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=float_format, lineterminator="\n")
    )
