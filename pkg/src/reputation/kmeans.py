"""
K-means clustering with k-means++ seeding.

Lloyd iterations run until the assignment reaches a fixpoint or max_iter is
hit. A cluster that empties is re-seeded with the point farthest from its
assigned centroid, which keeps the inertia sequence non-increasing.
"""

from typing import List

import numpy as np

from src.data.splitter import make_rng
from src.models.reputation import ClusterAssignment
from src.utils.errors import ConfigError, ValidationError
from src.utils.logger import get_logger

logger = get_logger("reputation.kmeans")


def _squared_distances(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n_points, k) matrix of squared Euclidean distances."""
    diff = features[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plus_plus(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """
    k-means++ seeding.

    Each new centroid is drawn with probability proportional to the squared
    distance from the nearest centroid chosen so far; when every remaining
    point coincides with a centroid the draw is uniform over unused points.
    """
    n = features.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _squared_distances(features, features[chosen]).min(axis=1)

    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            unused = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(unused))
        chosen.append(idx)
        closest = np.minimum(closest, _squared_distances(features, features[[idx]])[:, 0])

    return features[chosen].copy()


def kmeans(
    features: np.ndarray,
    k: int,
    seed: int = 42,
    max_iter: int = 100,
) -> ClusterAssignment:
    """
    Cluster per-entity feature vectors.

    Args:
        features: (n_entities, n_dims) finite feature matrix
        k: Number of clusters, 1 <= k <= n_entities
        seed: Seed for k-means++ draws
        max_iter: Maximum Lloyd iterations

    Returns:
        ClusterAssignment with the inertia recorded after every assignment step

    Raises:
        ConfigError: If k is out of range
        ValidationError: If a feature is not finite
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    n = features.shape[0]
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > n:
        raise ConfigError(f"k={k} exceeds the number of entities ({n})")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    if not np.all(np.isfinite(features)):
        raise ValidationError("kmeans features must be finite")

    rng = make_rng(seed)
    centroids = kmeans_plus_plus(features, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    history: List[float] = []
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        distances = _squared_distances(features, centroids)
        new_labels = distances.argmin(axis=1)
        history.append(float(distances[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

        point_cost = distances[np.arange(n), labels]
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                centroids[c] = features[labels == c].mean(axis=0)

        for c in np.flatnonzero(counts == 0):
            # Farthest point from its own centroid; zero its cost so the next
            # empty cluster picks a different one.
            far = int(point_cost.argmax())
            centroids[c] = features[far]
            point_cost[far] = -1.0

    distances = _squared_distances(features, centroids)
    labels = distances.argmin(axis=1)
    inertia = float(distances[np.arange(n), labels].sum())

    logger.debug(
        f"kmeans k={k} n={n}: {n_iter} iterations, inertia {inertia:.6g}, "
        f"sizes {np.bincount(labels, minlength=k).tolist()}"
    )
    return ClusterAssignment(
        k=k,
        labels=labels,
        centroids=centroids,
        inertia=inertia,
        inertia_history=history,
        n_iter=n_iter,
    )
