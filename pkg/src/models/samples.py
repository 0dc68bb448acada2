"""
Network input records.

TrainSample is the validated single-observation form; SampleBatch holds the
same fields as parallel arrays, which is what the network consumes.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainSample(BaseModel):
    """One (user, service) observation with everything the network reads."""

    user_index: int = Field(..., ge=0)
    service_index: int = Field(..., ge=0)
    user_region: int = Field(default=0, ge=0)
    service_region: int = Field(default=0, ge=0)
    user_reputation: float = Field(default=0.5, ge=0.0, le=1.0)
    service_reputation: float = Field(default=0.5, ge=0.0, le=1.0)
    target_qos: Optional[float] = Field(default=None, description="Seconds")


class SampleBatch(BaseModel):
    """Parallel arrays of samples."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    user_index: np.ndarray
    service_index: np.ndarray
    user_region: np.ndarray
    service_region: np.ndarray
    user_reputation: np.ndarray
    service_reputation: np.ndarray
    target: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def validate_arrays(self) -> "SampleBatch":
        """Coerce dtypes and check lengths and reputation ranges."""
        for name in ("user_index", "service_index", "user_region", "service_region"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        for name in ("user_reputation", "service_reputation"):
            values = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if values.size and (values.min() < 0.0 or values.max() > 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, values)
        if self.target is not None:
            object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64).reshape(-1))

        n = self.user_index.size
        arrays = [self.service_index, self.user_region, self.service_region,
                  self.user_reputation, self.service_reputation]
        if self.target is not None:
            arrays.append(self.target)
        if any(a.size != n for a in arrays):
            raise ValueError("all sample arrays must have the same length")
        return self

    def __len__(self) -> int:
        return int(self.user_index.size)

    def take(self, idx: np.ndarray) -> "SampleBatch":
        """Rows at ``idx``, in that order."""
        return SampleBatch(
            user_index=self.user_index[idx],
            service_index=self.service_index[idx],
            user_region=self.user_region[idx],
            service_region=self.service_region[idx],
            user_reputation=self.user_reputation[idx],
            service_reputation=self.service_reputation[idx],
            target=None if self.target is None else self.target[idx],
        )

    @classmethod
    def from_samples(cls, samples: List[TrainSample]) -> "SampleBatch":
        targets = [s.target_qos for s in samples]
        return cls(
            user_index=np.array([s.user_index for s in samples], dtype=np.int64),
            service_index=np.array([s.service_index for s in samples], dtype=np.int64),
            user_region=np.array([s.user_region for s in samples], dtype=np.int64),
            service_region=np.array([s.service_region for s in samples], dtype=np.int64),
            user_reputation=np.array([s.user_reputation for s in samples], dtype=np.float64),
            service_reputation=np.array([s.service_reputation for s in samples], dtype=np.float64),
            target=None if any(t is None for t in targets) else np.array(targets, dtype=np.float64),
        )
