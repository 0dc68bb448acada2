"""
QoS data models.

Defines the sparse user x service observation matrix, entity metadata and
the density-controlled train/test split records.
"""

from enum import Enum
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Entry = Tuple[int, int]


class EntityKind(str, Enum):
    """Which side of the matrix an entity lives on."""
    USER = "user"
    SERVICE = "service"


class QosMatrix(BaseModel):
    """
    Sparse user x service QoS matrix.

    Observed entries are stored as three parallel arrays kept in canonical
    row-major order; missing entries are simply absent.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_users: int = Field(..., ge=0)
    n_services: int = Field(..., ge=0)
    users: np.ndarray
    services: np.ndarray
    values: np.ndarray

    @model_validator(mode="after")
    def validate_entries(self) -> "QosMatrix":
        """Enforce index bounds, finite non-negative values and canonical order."""
        users = np.asarray(self.users, dtype=np.int64)
        services = np.asarray(self.services, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if not (users.shape == services.shape == values.shape) or users.ndim != 1:
            raise ValueError("users, services and values must be 1-D arrays of equal length")
        if values.size:
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise ValueError("QoS values must be finite and >= 0")
            if users.min() < 0 or users.max() >= self.n_users:
                raise ValueError("user index out of range")
            if services.min() < 0 or services.max() >= self.n_services:
                raise ValueError("service index out of range")
        order = np.lexsort((services, users))
        keys = users[order] * max(self.n_services, 1) + services[order]
        if keys.size > 1 and np.any(np.diff(keys) == 0):
            raise ValueError("duplicate (user, service) entry")
        for name, arr in (("users", users), ("services", services), ("values", values)):
            arr = arr[order]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        return self

    @classmethod
    def from_entries(
        cls, n_users: int, n_services: int, entries: Mapping[Entry, float]
    ) -> "QosMatrix":
        """Build a matrix from a {(user, service): value} mapping."""
        keys = list(entries.keys())
        return cls(
            n_users=n_users,
            n_services=n_services,
            users=np.array([k[0] for k in keys], dtype=np.int64),
            services=np.array([k[1] for k in keys], dtype=np.int64),
            values=np.array([entries[k] for k in keys], dtype=np.float64),
        )

    @classmethod
    def from_dense(cls, dense: np.ndarray, missing: float = -1.0) -> "QosMatrix":
        """Build a matrix from a dense array where ``missing`` marks absent entries."""
        dense = np.asarray(dense, dtype=np.float64)
        users, services = np.nonzero(dense != missing)
        return cls(
            n_users=dense.shape[0],
            n_services=dense.shape[1],
            users=users,
            services=services,
            values=dense[users, services],
        )

    def subset(self, mask: np.ndarray) -> "QosMatrix":
        """Matrix of the same shape holding only entries selected by ``mask``."""
        return QosMatrix(
            n_users=self.n_users,
            n_services=self.n_services,
            users=self.users[mask],
            services=self.services[mask],
            values=self.values[mask],
        )

    def to_dict(self) -> Dict[Entry, float]:
        """Observed entries as a {(user, service): value} mapping."""
        return {
            (int(u), int(s)): float(v)
            for u, s, v in zip(self.users, self.services, self.values)
        }

    def to_dense(self, missing: float = -1.0) -> np.ndarray:
        """Dense array with ``missing`` in unobserved cells."""
        dense = np.full((self.n_users, self.n_services), missing, dtype=np.float64)
        dense[self.users, self.services] = self.values
        return dense

    def keys(self) -> List[Entry]:
        """Observed (user, service) pairs in canonical order."""
        return [(int(u), int(s)) for u, s in zip(self.users, self.services)]

    def entity_indices(self, kind: EntityKind) -> np.ndarray:
        """Per-entry index on the requested side."""
        return self.users if EntityKind(kind) == EntityKind.USER else self.services

    def entity_count(self, kind: EntityKind) -> int:
        """Number of entities on the requested side."""
        return self.n_users if EntityKind(kind) == EntityKind.USER else self.n_services

    def same_entries(self, other: "QosMatrix") -> bool:
        """True when both matrices observe exactly the same cells with equal values."""
        return (
            self.n_users == other.n_users
            and self.n_services == other.n_services
            and np.array_equal(self.users, other.users)
            and np.array_equal(self.services, other.services)
            and np.array_equal(self.values, other.values)
        )

    def items(self) -> Iterator[Tuple[int, int, float]]:
        """Iterate (user, service, value) triples in canonical order."""
        for u, s, v in zip(self.users, self.services, self.values):
            yield int(u), int(s), float(v)

    def __len__(self) -> int:
        return int(self.values.size)


class EntityMeta(BaseModel):
    """Region metadata for one user or service."""

    entity_index: int = Field(..., ge=0)
    region_index: int = Field(default=0, ge=0)
    kind: EntityKind


class MetadataTable(BaseModel):
    """
    Metadata for one side of the matrix.

    Region strings are interned into ``vocabulary`` in first-appearance order;
    index 0 is reserved for unknown or blank regions.
    """

    kind: EntityKind
    entities: List[EntityMeta] = Field(default_factory=list)
    vocabulary: List[str] = Field(default_factory=lambda: [""])

    @model_validator(mode="after")
    def validate_regions(self) -> "MetadataTable":
        """Every region index must fall inside the vocabulary."""
        for meta in self.entities:
            if meta.region_index >= len(self.vocabulary):
                raise ValueError(
                    f"region index {meta.region_index} outside vocabulary of {len(self.vocabulary)}"
                )
        return self

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def region_array(self, n_entities: int) -> np.ndarray:
        """Region index per entity; entities without metadata map to 0."""
        regions = np.zeros(n_entities, dtype=np.int64)
        for meta in self.entities:
            if meta.entity_index < n_entities:
                regions[meta.entity_index] = meta.region_index
        return regions

    @classmethod
    def unknown(cls, kind: EntityKind) -> "MetadataTable":
        """Table with no metadata: every entity is in the reserved region."""
        return cls(kind=kind)

    def __len__(self) -> int:
        return len(self.entities)

    def __getitem__(self, i: int) -> EntityMeta:
        return self.entities[i]


class SplitSpec(BaseModel):
    """
    Matrix density and seed of a train/test split.

    The density range (0, 1] is enforced by split_by_density, which reports
    violations as configuration errors.
    """

    density: float
    seed: int = Field(default=42, ge=0, lt=2**64)


class Split(BaseModel):
    """Disjoint train/test partition of a matrix's observed entries."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    train: QosMatrix
    test: QosMatrix
