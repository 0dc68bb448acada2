"""
Reliable-cluster reputation calculation.

Users and services are clustered separately on standardized [mean, std]
statistics of their observed QoS. The largest cluster is taken as the
reliable population; its mean mu_r and population standard deviation
sigma_r define the 3-sigma band (mu_r - 3 sigma_r, mu_r + 3 sigma_r). Each
observation of an entity inside the band counts as positive feedback,
anything else as negative.

Reputation follows the binary Logit model: if the utilities of giving
positive and negative feedback carry independent standard Gumbel noise,
their difference is Logistic(0, 1) and with V = beta * X

    p1 = e^(beta po) / (e^(beta po) + e^(beta ne)),   p2 = 1 - p1,
    Re = p1 / (p1 + p2) = 1 / (1 + e^(-beta (po - ne))).

The last form is evaluated with scipy's expit, which never overflows.
"""

from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit

from src.models.experiment import RcmConfig
from src.models.qos import EntityKind, QosMatrix
from src.models.reputation import (
    ClusterAssignment,
    FeedbackVector,
    KindReputations,
    ReliableClusterStats,
    Reputation,
    ReputationTable,
)
from src.reputation.kmeans import kmeans
from src.utils.errors import ConfigError, DataError, DegenerateClusterError
from src.utils.io import atomic_write_json, atomic_write_text
from src.utils.logger import get_logger

EPS_DEGENERATE = 1e-9
NEUTRAL_REPUTATION = 0.5

logger = get_logger("reputation")


def _per_entity_moments(matrix: QosMatrix, kind: EntityKind) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Observation count, mean and population std per entity (0 where unobserved)."""
    idx = matrix.entity_indices(kind)
    n = matrix.entity_count(kind)
    counts = np.bincount(idx, minlength=n).astype(np.float64)
    sums = np.bincount(idx, weights=matrix.values, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / counts, 0.0)
    centered = matrix.values - means[idx]
    sq = np.bincount(idx, weights=centered * centered, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        stds = np.where(counts > 0, np.sqrt(sq / np.maximum(counts, 1.0)), 0.0)
    return counts, means, stds


def entity_features(matrix: QosMatrix, kind: EntityKind, standardize: bool = True) -> np.ndarray:
    """
    Clustering features per entity.

    Each entity is described by [mean, std] of its observed QoS; entities
    without observations take the global [mean, std]. Columns are then
    standardized to zero mean and unit variance across entities (a column
    with zero variance is only centered).

    Args:
        matrix: Non-empty QoS matrix
        kind: Side to describe
        standardize: Return raw statistics when False

    Returns:
        (n_entities, 2) feature matrix
    """
    if len(matrix) == 0:
        raise DataError("cannot derive entity features from an empty matrix")
    kind = EntityKind(kind)
    counts, means, stds = _per_entity_moments(matrix, kind)

    global_mean = float(matrix.values.mean())
    global_std = float(matrix.values.std())
    unseen = counts == 0
    means[unseen] = global_mean
    stds[unseen] = global_std

    features = np.column_stack([means, stds])
    if not standardize:
        return features

    centered = features - features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0
    return centered / scale


def reliable_cluster(
    assignment: ClusterAssignment, matrix: QosMatrix, kind: EntityKind
) -> ReliableClusterStats:
    """
    Statistics of the largest cluster.

    Ties between equally large clusters go to the lowest cluster index.
    mu_r and sigma_r (population) are taken over every observation of every
    entity in that cluster.

    Raises:
        DataError: If the assignment does not cover all entities of the kind
        DegenerateClusterError: If the reliable cluster has no observations
    """
    kind = EntityKind(kind)
    if assignment.labels.size != matrix.entity_count(kind):
        raise DataError(
            f"cluster assignment covers {assignment.labels.size} entities, "
            f"matrix has {matrix.entity_count(kind)} {kind.value}s"
        )
    sizes = np.bincount(assignment.labels, minlength=assignment.k)
    reliable = int(np.argmax(sizes))

    in_cluster = assignment.labels[matrix.entity_indices(kind)] == reliable
    observations = matrix.values[in_cluster]
    if observations.size == 0:
        raise DegenerateClusterError(
            f"reliable {kind.value} cluster {reliable} has no QoS observations"
        )
    return ReliableClusterStats(
        reliable_cluster_index=reliable,
        mu_r=float(observations.mean()),
        sigma_r=float(observations.std()),
        n_observations=int(observations.size),
    )


def positive_mask(values: np.ndarray, stats: ReliableClusterStats) -> np.ndarray:
    """True where an observation lies inside the open 3-sigma band."""
    if stats.sigma_r == 0.0:
        return np.abs(values - stats.mu_r) <= EPS_DEGENERATE
    low = stats.mu_r - 3.0 * stats.sigma_r
    high = stats.mu_r + 3.0 * stats.sigma_r
    return (values > low) & (values < high)


def classify_feedback_counts(
    matrix: QosMatrix, stats: ReliableClusterStats, kind: EntityKind
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized feedback counts: (po, ne) arrays indexed by entity."""
    kind = EntityKind(kind)
    idx = matrix.entity_indices(kind)
    n = matrix.entity_count(kind)
    positive = positive_mask(matrix.values, stats)
    po = np.bincount(idx[positive], minlength=n).astype(np.int64)
    ne = np.bincount(idx[~positive], minlength=n).astype(np.int64)
    return po, ne


def classify_feedback(
    matrix: QosMatrix, stats: ReliableClusterStats, kind: EntityKind
) -> Dict[int, FeedbackVector]:
    """
    Feedback vector F = [po, ne] for every entity of the kind.

    Users are judged on their row entries, services on their column entries;
    po + ne equals the entity's observation count.
    """
    po, ne = classify_feedback_counts(matrix, stats, kind)
    return {i: FeedbackVector(po=int(p), ne=int(q)) for i, (p, q) in enumerate(zip(po, ne))}


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ConfigError(f"beta must be > 0, got {beta}")


def feedback_probabilities(feedback: FeedbackVector, beta: float) -> Tuple[float, float]:
    """Probabilities (p1, p2) of positive and negative feedback under the Logit model."""
    _check_beta(beta)
    margin = beta * (feedback.po - feedback.ne)
    return float(expit(margin)), float(expit(-margin))


def reputation(feedback: FeedbackVector, beta: float) -> Reputation:
    """
    Reputation Re = p1 / (p1 + p2) in the overflow-safe sigmoid form.

    Raises:
        ConfigError: If beta <= 0
    """
    p1, p2 = feedback_probabilities(feedback, beta)
    return Reputation(value=p1 / (p1 + p2))


def reputation_array(po: np.ndarray, ne: np.ndarray, beta: float) -> np.ndarray:
    """Vectorized reputation over count arrays."""
    _check_beta(beta)
    return expit(beta * (np.asarray(po, dtype=np.float64) - np.asarray(ne, dtype=np.float64)))


def _reputations_for_kind(
    matrix: QosMatrix, kind: EntityKind, k: int, beta: float, seed: int, max_iter: int
) -> KindReputations:
    features = entity_features(matrix, kind)
    assignment = kmeans(features, k=k, seed=seed, max_iter=max_iter)
    stats = reliable_cluster(assignment, matrix, kind)
    po, ne = classify_feedback_counts(matrix, stats, kind)
    result = KindReputations(
        kind=kind,
        assignment=assignment,
        stats=stats,
        po=po,
        ne=ne,
        reputations=reputation_array(po, ne, beta),
    )
    logger.info(
        f"{kind.value} reputations: clusters {assignment.cluster_sizes()}, "
        f"reliable #{stats.reliable_cluster_index} mu_r={stats.mu_r:.4f} "
        f"sigma_r={stats.sigma_r:.4f}, feedback +{int(po.sum())}/-{int(ne.sum())}"
    )
    return result


def compute_reputations(
    matrix: QosMatrix, config: Optional[RcmConfig] = None, seed: int = 42
) -> ReputationTable:
    """
    Run the full reputation pipeline for users and services.

    Args:
        matrix: Observation matrix (the training split during experiments)
        config: Cluster counts, beta and kmeans iteration cap
        seed: Seed for the k-means++ draws

    Returns:
        ReputationTable
    """
    config = config or RcmConfig()
    _check_beta(config.beta)
    users = _reputations_for_kind(
        matrix, EntityKind.USER, config.n_user_clusters, config.beta, seed, config.kmeans_max_iter
    )
    services = _reputations_for_kind(
        matrix,
        EntityKind.SERVICE,
        config.n_service_clusters,
        config.beta,
        seed,
        config.kmeans_max_iter,
    )
    return ReputationTable(users=users, services=services, beta=config.beta)


def reputations_frame(table: ReputationTable) -> pd.DataFrame:
    """Long-format table: kind,index,po,ne,reputation."""
    frames = []
    for part in (table.users, table.services):
        frames.append(
            pd.DataFrame(
                {
                    "kind": part.kind.value,
                    "index": np.arange(part.reputations.size),
                    "po": part.po,
                    "ne": part.ne,
                    "reputation": part.reputations,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def write_reputations(
    table: ReputationTable,
    path: Union[str, Path],
    extra_summary: Optional[Dict[str, object]] = None,
) -> Path:
    """
    Write ``reputations.csv`` (12 significant digits) and a JSON summary beside it.

    Returns:
        Path of the CSV file
    """
    target = Path(path)
    csv_text = reputations_frame(table).to_csv(
        index=False, float_format="%.12g", lineterminator="\n"
    )
    atomic_write_text(target, csv_text)

    summary: Dict[str, object] = {
        "beta": table.beta,
        "user": table.users.summary(),
        "service": table.services.summary(),
    }
    if extra_summary:
        summary.update(extra_summary)
    atomic_write_json(target.with_name(target.stem + "_summary.json"), summary)
    logger.info(f"Wrote {len(table.users.reputations)} user and "
                f"{len(table.services.reputations)} service reputations to {target}")
    return target
