"""
Density-controlled train/test splits.

The observed entries are listed in canonical row-major order, shuffled with a
seeded PCG64 generator (numpy's Fisher-Yates permutation), and the first
round(density x |entries|) become the training matrix; the rest form the
test matrix.
"""

import json
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

from src.models.qos import QosMatrix, Split, SplitSpec
from src.utils.errors import ConfigError, DataError
from src.utils.io import atomic_write_csv, atomic_write_json
from src.utils.logger import get_logger

logger = get_logger("data.split")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded 64-bit PCG generator shared by every randomized stage."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def train_size(n_entries: int, density: float) -> int:
    """round(density x n), rounding halves up."""
    return int(np.floor(density * n_entries + 0.5))


def split_by_density(matrix: QosMatrix, spec: SplitSpec) -> Split:
    """
    Partition a matrix's observed entries into train and test.

    Args:
        matrix: Matrix with at least one observed entry
        spec: Density in (0, 1] and seed

    Returns:
        Split whose train part holds round(density x |entries|) entries

    Raises:
        ConfigError: If density is outside (0, 1]
        DataError: If the matrix has no observed entries
    """
    if not 0.0 < spec.density <= 1.0:
        raise ConfigError(f"density {spec.density} outside (0, 1]")
    n = len(matrix)
    if n == 0:
        raise DataError("cannot split a matrix without observed entries")

    order = make_rng(spec.seed).permutation(n)
    n_train = train_size(n, spec.density)
    train_mask = np.zeros(n, dtype=bool)
    train_mask[order[:n_train]] = True

    split = Split(train=matrix.subset(train_mask), test=matrix.subset(~train_mask))
    logger.info(
        f"Split {n} entries at density {spec.density:g} (seed {spec.seed}): "
        f"{len(split.train)} train / {len(split.test)} test"
    )
    return split


def split_manifest(split: Split, spec: SplitSpec) -> Dict[str, object]:
    """JSON sidecar describing a split."""
    return {
        "seed": spec.seed,
        "density": spec.density,
        "n_users": split.train.n_users,
        "n_services": split.train.n_services,
        "n_train": len(split.train),
        "n_test": len(split.test),
    }


def save_split(split: Split, spec: SplitSpec, out_dir: Union[str, Path]) -> Path:
    """
    Write ``train.csv``, ``test.csv`` (user,service,value) and ``split.json``.

    Returns:
        The output directory
    """
    out = Path(out_dir)
    for name, part in (("train", split.train), ("test", split.test)):
        frame = pd.DataFrame({"user": part.users, "service": part.services, "value": part.values})
        atomic_write_csv(out / f"{name}.csv", frame)
    atomic_write_json(out / "split.json", split_manifest(split, spec))
    logger.debug(f"Split manifest written to {out}: {json.dumps(split_manifest(split, spec))}")
    return out
