"""
Mean predictors used as a sanity floor for the network.
"""

from typing import Literal, Optional

import numpy as np

from src.models.qos import QosMatrix
from src.utils.errors import DataError

BaselineKind = Literal["global-mean", "user-mean", "service-mean"]


class BaselinePredictor:
    """Predicts a training-set mean: overall, per user or per service."""

    def __init__(self, kind: BaselineKind = "global-mean") -> None:
        if kind not in ("global-mean", "user-mean", "service-mean"):
            raise ValueError(f"unknown baseline kind: {kind}")
        self.kind = kind
        self.global_mean: Optional[float] = None
        self.scope_means: Optional[np.ndarray] = None

    def fit(self, train: QosMatrix) -> "BaselinePredictor":
        """
        Raises:
            DataError: If the training matrix is empty
        """
        if len(train) == 0:
            raise DataError("baseline needs at least one training entry")
        self.global_mean = float(train.values.mean())
        if self.kind == "global-mean":
            return self

        idx, n = (
            (train.users, train.n_users) if self.kind == "user-mean"
            else (train.services, train.n_services)
        )
        counts = np.bincount(idx, minlength=n)
        sums = np.bincount(idx, weights=train.values, minlength=n)
        means = np.full(n, self.global_mean)
        seen = counts > 0
        means[seen] = sums[seen] / counts[seen]
        self.scope_means = means
        return self

    def predict(self, test: QosMatrix) -> np.ndarray:
        """One prediction per test entry, in the matrix's canonical order."""
        if self.global_mean is None:
            raise RuntimeError("baseline has not been fitted")
        if self.scope_means is None:
            return np.full(len(test), self.global_mean)
        idx = test.users if self.kind == "user-mean" else test.services
        out = np.full(len(test), self.global_mean)
        known = idx < self.scope_means.size
        out[known] = self.scope_means[idx[known]]
        return out


def baseline_fit_predict(train: QosMatrix, test: QosMatrix, kind: BaselineKind = "global-mean") -> np.ndarray:
    """Fit on ``train`` and predict every entry of ``test``."""
    return BaselinePredictor(kind).fit(train).predict(test)
