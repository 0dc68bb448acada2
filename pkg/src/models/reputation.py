"""
Reputation data models.

Records produced by the reliable-cluster reputation pipeline: cluster
assignments, reliable-cluster statistics, feedback counts and reputations.
"""

from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.qos import EntityKind


class ClusterAssignment(BaseModel):
    """K-means result over one side of the matrix."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    k: int = Field(..., ge=1)
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float = Field(..., ge=0.0)
    inertia_history: List[float] = Field(default_factory=list)
    n_iter: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_clusters(self) -> "ClusterAssignment":
        """Labels must be valid cluster indices and centroids finite."""
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError("cluster label outside [0, k)")
        if self.centroids.shape[0] != self.k or not np.all(np.isfinite(self.centroids)):
            raise ValueError("centroids must be k finite vectors")
        return self

    def cluster_sizes(self) -> List[int]:
        """Number of entities per cluster."""
        return [int(c) for c in np.bincount(self.labels, minlength=self.k)]


class ReliableClusterStats(BaseModel):
    """Mean and population standard deviation of the reliable cluster's observations."""

    reliable_cluster_index: int = Field(..., ge=0)
    mu_r: float
    sigma_r: float = Field(..., ge=0.0)
    n_observations: int = Field(default=0, ge=0)


class FeedbackVector(BaseModel):
    """Positive and negative feedback counts F = [po, ne]."""

    po: int = Field(default=0, ge=0)
    ne: int = Field(default=0, ge=0)

    @property
    def total(self) -> int:
        return self.po + self.ne


class Reputation(BaseModel):
    """Reputation score in [0, 1]."""

    value: float = Field(..., ge=0.0, le=1.0)


class KindReputations(BaseModel):
    """Reputation results for every entity of one kind."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: EntityKind
    assignment: ClusterAssignment
    stats: ReliableClusterStats
    po: np.ndarray
    ne: np.ndarray
    reputations: np.ndarray

    def summary(self) -> Dict[str, object]:
        """JSON-ready summary of the clustering and feedback statistics."""
        return {
            "kind": self.kind.value,
            "n_entities": int(self.reputations.size),
            "cluster_sizes": self.assignment.cluster_sizes(),
            "inertia": self.assignment.inertia,
            "kmeans_iterations": self.assignment.n_iter,
            "reliable_cluster_index": self.stats.reliable_cluster_index,
            "mu_r": self.stats.mu_r,
            "sigma_r": self.stats.sigma_r,
            "reliable_observations": self.stats.n_observations,
            "positive_feedback": int(self.po.sum()),
            "negative_feedback": int(self.ne.sum()),
        }


class ReputationTable(BaseModel):
    """User and service reputations computed from one (training) matrix."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    users: KindReputations
    services: KindReputations
    beta: float

    def for_kind(self, kind: EntityKind) -> KindReputations:
        return self.users if EntityKind(kind) == EntityKind.USER else self.services
