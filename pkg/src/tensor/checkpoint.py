"""
Binary checkpoint format.

Layout:
    8 bytes   magic b"RAHNCKPT"
    8 bytes   header length, unsigned little-endian
    n bytes   UTF-8 JSON header: format_version, parameters [{name, shape}], config
    ...       float64 little-endian blocks in header order, row-major
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import numpy as np

from src.tensor.tensor import Tensor
from src.utils.errors import CheckpointError
from src.utils.io import atomic_write_bytes
from src.utils.logger import get_logger

MAGIC = b"RAHNCKPT"
FORMAT_VERSION = 1

logger = get_logger("tensor.checkpoint")


def save_checkpoint(
    path: Union[str, Path],
    params: Mapping[str, Union[Tensor, np.ndarray]],
    config: Dict[str, Any],
) -> Path:
    """
    Write named parameters and the config that produced them.

    Args:
        path: Destination file
        params: Ordered name -> values mapping
        config: JSON-serializable configuration echo

    Returns:
        The destination path
    """
    arrays = {
        name: np.ascontiguousarray(p.data if isinstance(p, Tensor) else p, dtype="<f8")
        for name, p in params.items()
    }
    header = {
        "format_version": FORMAT_VERSION,
        "parameters": [{"name": n, "shape": list(a.shape)} for n, a in arrays.items()],
        "config": config,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        [MAGIC, struct.pack("<Q", len(header_bytes)), header_bytes]
        + [a.tobytes() for a in arrays.values()]
    )
    target = atomic_write_bytes(path, payload)
    logger.info(f"Saved {len(arrays)} parameters to {target}")
    return target


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Read a checkpoint.

    Returns:
        (header, name -> array) in stored order

    Raises:
        CheckpointError: If the file is missing, truncated or not a checkpoint
    """
    source = Path(path)
    try:
        raw = source.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {source}: {e}") from e

    if len(raw) < 16 or raw[:8] != MAGIC:
        raise CheckpointError(f"{source} is not a checkpoint file")
    (header_len,) = struct.unpack("<Q", raw[8:16])
    end = 16 + header_len
    if end > len(raw):
        raise CheckpointError(f"{source}: truncated header")
    try:
        header = json.loads(raw[16:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: unreadable header: {e}") from e

    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{source}: format version {header.get('format_version')} is not supported"
        )

    arrays: Dict[str, np.ndarray] = {}
    offset = end
    for entry in header.get("parameters", []):
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{source}: truncated data for '{entry['name']}'")
        arrays[entry["name"]] = (
            np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        )
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{source}: {len(raw) - offset} trailing bytes")
    return header, arrays
