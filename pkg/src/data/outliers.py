"""
Evaluation outlier filtering.

Test entries are scored per service with the robust statistic
|q - median_s| / (IQR_s + eps), using each service's observed values in a
reference matrix (the training split during an experiment). The
ceil(fraction x |test|) highest-scoring entries are dropped.
"""

import math
from typing import Mapping, Optional, Tuple

import numpy as np
from scipy import stats

from src.models.qos import Entry, QosMatrix
from src.utils.errors import ConfigError, ValidationError
from src.utils.logger import get_logger

EPS_IQR = 1e-9

logger = get_logger("data.outliers")


def removal_count(n_test: int, fraction: float) -> int:
    """ceil(fraction x n), tolerant of binary rounding (0.1 x 30 -> 3); at least 1 when both are positive."""
    if fraction <= 0.0 or n_test <= 0:
        return 0
    return min(n_test, max(1, int(math.ceil(fraction * n_test - 1e-9))))


def _service_statistics(values: np.ndarray, services: np.ndarray, n_services: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    medians = np.full(n_services, np.nan)
    iqrs = np.full(n_services, np.nan)
    order = np.argsort(services, kind="stable")
    sorted_services = services[order]
    sorted_values = values[order]
    present, starts = np.unique(sorted_services, return_index=True)
    bounds = np.append(starts, sorted_services.size)
    for i, service in enumerate(present):
        chunk = sorted_values[bounds[i]:bounds[i + 1]]
        medians[service] = np.median(chunk)
        iqrs[service] = stats.iqr(chunk)
    return medians, iqrs, np.isfinite(medians)


def outlier_scores(test: QosMatrix, reference: Optional[QosMatrix] = None) -> np.ndarray:
    """
    Robust per-service anomaly score of every test entry.

    Services absent from the reference are scored against their own test
    values.
    """
    reference = test if reference is None else reference
    medians, iqrs, known = _service_statistics(
        reference.values, reference.services, test.n_services
    )
    if reference is not test:
        fallback_median, fallback_iqr, fallback_known = _service_statistics(
            test.values, test.services, test.n_services
        )
        missing = ~known & fallback_known
        medians[missing] = fallback_median[missing]
        iqrs[missing] = fallback_iqr[missing]

    med = medians[test.services]
    iqr = iqrs[test.services]
    return np.abs(test.values - med) / (iqr + EPS_IQR)


def filter_outliers(
    test: QosMatrix,
    fraction: float,
    reference: Optional[QosMatrix] = None,
    predictions: Optional[Mapping[Entry, float]] = None,
) -> QosMatrix:
    """
    Drop the most anomalous test entries.

    Removal depends on data statistics only; ``predictions``, when given, is
    checked to cover every test entry so the caller's evaluation stays aligned.

    Args:
        test: Test matrix
        fraction: Share to remove, 0 <= fraction < 1
        reference: Matrix supplying per-service median/IQR (defaults to ``test``)
        predictions: Optional {(user, service): value} mapping over the test entries

    Returns:
        Retained test matrix

    Raises:
        ConfigError: If fraction is outside [0, 1)
        ValidationError: If predictions miss a test entry
    """
    if not 0.0 <= fraction < 1.0:
        raise ConfigError(f"outlier fraction {fraction} outside [0, 1)")
    if predictions is not None:
        missing = [key for key in test.keys() if key not in predictions]
        if missing:
            raise ValidationError(f"{len(missing)} test entries have no prediction, e.g. {missing[0]}")

    n_remove = removal_count(len(test), fraction)
    if n_remove == 0:
        return test

    scores = outlier_scores(test, reference)
    # Highest score first; ties by (user, service) ascending.
    ranking = np.lexsort((test.services, test.users, -scores))
    keep = np.ones(len(test), dtype=bool)
    keep[ranking[:n_remove]] = False

    logger.info(
        f"Removed {n_remove} of {len(test)} test entries as outliers "
        f"(fraction {fraction:g}, min removed score {scores[ranking[n_remove - 1]]:.3g})"
    )
    return test.subset(keep)
