"""
Data models for the RAHN toolkit.

This module exports all data models for easy import.
"""

from .experiment import (
    ExperimentConfig,
    LoggingConfig,
    ModelConfig,
    PathsConfig,
    ProtocolConfig,
    RahnConfig,
    RcmConfig,
)
from .qos import (
    EntityKind,
    EntityMeta,
    MetadataTable,
    QosMatrix,
    Split,
    SplitSpec,
)
from .samples import SampleBatch, TrainSample
from .reports import (
    MetricReport,
    SweepCellResult,
    SweepResult,
    TrainingReport,
)
from .reputation import (
    ClusterAssignment,
    FeedbackVector,
    KindReputations,
    ReliableClusterStats,
    Reputation,
    ReputationTable,
)

__all__ = [
    # Configuration
    "ExperimentConfig",
    "PathsConfig",
    "RcmConfig",
    "ModelConfig",
    "ProtocolConfig",
    "LoggingConfig",
    "RahnConfig",
    # Network inputs
    "TrainSample",
    "SampleBatch",
    # QoS data
    "EntityKind",
    "EntityMeta",
    "MetadataTable",
    "QosMatrix",
    "Split",
    "SplitSpec",
    # Reputation
    "ClusterAssignment",
    "ReliableClusterStats",
    "FeedbackVector",
    "Reputation",
    "KindReputations",
    "ReputationTable",
    # Reports
    "TrainingReport",
    "MetricReport",
    "SweepCellResult",
    "SweepResult",
]
