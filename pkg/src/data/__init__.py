"""
QoS data ingestion, splitting and outlier filtering.
"""

from .matrix_io import (
    MISSING_SENTINEL,
    load_matrix,
    load_metadata,
    save_matrix,
    save_metadata,
)
from .outliers import EPS_IQR, filter_outliers, outlier_scores, removal_count
from .splitter import make_rng, save_split, split_by_density, split_manifest, train_size
from .synthetic import SyntheticQosGenerator, generate_fixture

__all__ = [
    "MISSING_SENTINEL",
    "load_matrix",
    "save_matrix",
    "load_metadata",
    "save_metadata",
    "split_by_density",
    "split_manifest",
    "save_split",
    "make_rng",
    "train_size",
    "filter_outliers",
    "outlier_scores",
    "removal_count",
    "EPS_IQR",
    "SyntheticQosGenerator",
    "generate_fixture",
]
