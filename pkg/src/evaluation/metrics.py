"""
Prediction accuracy metrics.
"""

from typing import Mapping, Tuple, Union

import numpy as np

from src.models.qos import Entry, QosMatrix
from src.utils.errors import ValidationError

EntryValues = Union[QosMatrix, Mapping[Entry, float]]


def _as_mapping(values: EntryValues) -> Mapping[Entry, float]:
    return values.to_dict() if isinstance(values, QosMatrix) else values


def residual_metrics(residuals: np.ndarray) -> Tuple[float, float]:
    """(MAE, RMSE) of a residual vector."""
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.size == 0:
        raise ValidationError("cannot compute metrics over zero entries")
    mae = float(np.mean(np.abs(residuals)))
    rmse = float(np.sqrt(np.mean(residuals * residuals)))
    # Rounding can leave rmse a hair below mae when all residuals are equal.
    return mae, max(rmse, mae)


def mae_rmse(truth: EntryValues, pred: EntryValues) -> Tuple[float, float]:
    """
    MAE and RMSE over exactly the entries of ``truth``.

    Args:
        truth: Observed values by (user, service)
        pred: Predicted values over the same entry set

    Raises:
        ValidationError: If the entry sets differ or are empty
    """
    truth_map = _as_mapping(truth)
    pred_map = _as_mapping(pred)
    if len(truth_map) == 0:
        raise ValidationError("cannot compute metrics over zero entries")
    if truth_map.keys() != pred_map.keys():
        only_truth = len(set(truth_map) - set(pred_map))
        only_pred = len(set(pred_map) - set(truth_map))
        raise ValidationError(
            f"entry sets differ: {only_truth} entries without prediction, "
            f"{only_pred} predictions without truth"
        )
    keys = sorted(truth_map)
    residuals = np.array([pred_map[k] - truth_map[k] for k in keys], dtype=np.float64)
    return residual_metrics(residuals)
