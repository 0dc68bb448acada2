"""
Reputation calculation: reliable clusters, 3-sigma feedback and the Logit closed form.
"""

from .kmeans import kmeans, kmeans_plus_plus
from .rcm import (
    EPS_DEGENERATE,
    NEUTRAL_REPUTATION,
    classify_feedback,
    classify_feedback_counts,
    compute_reputations,
    entity_features,
    feedback_probabilities,
    positive_mask,
    reliable_cluster,
    reputation,
    reputation_array,
    reputations_frame,
    write_reputations,
)

__all__ = [
    "kmeans",
    "kmeans_plus_plus",
    "entity_features",
    "reliable_cluster",
    "positive_mask",
    "classify_feedback",
    "classify_feedback_counts",
    "feedback_probabilities",
    "reputation",
    "reputation_array",
    "compute_reputations",
    "reputations_frame",
    "write_reputations",
    "EPS_DEGENERATE",
    "NEUTRAL_REPUTATION",
]
