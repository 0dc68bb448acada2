"""
Tests for clustering, reliable-cluster statistics, feedback and the Logit reputation.
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.data import split_by_density
from src.models.experiment import RcmConfig
from src.models.qos import EntityKind, QosMatrix, SplitSpec
from src.models.reputation import ClusterAssignment, FeedbackVector, ReliableClusterStats
from src.reputation import (
    classify_feedback,
    compute_reputations,
    entity_features,
    feedback_probabilities,
    kmeans,
    reliable_cluster,
    reputation,
    reputation_array,
    write_reputations,
)
from src.utils.errors import ConfigError, DegenerateClusterError, ValidationError


def _assignment(labels, k) -> ClusterAssignment:
    labels = np.asarray(labels, dtype=np.int64)
    return ClusterAssignment(
        k=k, labels=labels, centroids=np.zeros((k, 2)), inertia=0.0
    )


class TestKmeans:
    """Lloyd iterations with k-means++ seeding."""

    def test_separated_blobs(self):
        features = np.array([[0.0], [0.1], [10.0], [10.1]])

        result = kmeans(features, k=2, seed=1)

        assert result.labels[0] == result.labels[1]
        assert result.labels[2] == result.labels[3]
        assert result.labels[0] != result.labels[2]

    def test_single_cluster_centroid_is_mean(self):
        features = np.random.default_rng(0).normal(size=(12, 2))

        result = kmeans(features, k=1)

        np.testing.assert_allclose(result.centroids[0], features.mean(axis=0), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_inertia_non_increasing(self, seed):
        features = np.random.default_rng(seed).normal(size=(60, 2))

        result = kmeans(features, k=5, seed=seed)

        history = result.inertia_history
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))
        assert result.inertia <= history[0] + 1e-9

    def test_final_assignment_is_fixpoint(self):
        features = np.random.default_rng(3).normal(size=(40, 2))

        result = kmeans(features, k=4, seed=3)

        distances = ((features[:, None, :] - result.centroids[None]) ** 2).sum(axis=2)
        np.testing.assert_array_equal(distances.argmin(axis=1), result.labels)

    def test_k_larger_than_entities(self):
        with pytest.raises(ConfigError):
            kmeans(np.zeros((3, 2)), k=4)

    def test_non_finite_feature(self):
        with pytest.raises(ValidationError):
            kmeans(np.array([[0.0, 1.0], [np.nan, 2.0]]), k=1)

    def test_identical_points_do_not_fail(self):
        result = kmeans(np.ones((6, 2)), k=3, seed=0)

        assert result.inertia == pytest.approx(0.0)


class TestEntityFeatures:
    """Per-entity [mean, std] statistics."""

    def test_raw_statistics(self):
        m = QosMatrix.from_entries(2, 3, {(0, 0): 1.0, (0, 1): 1.0, (0, 2): 1.0, (1, 0): 3.0})

        raw = entity_features(m, EntityKind.USER, standardize=False)

        np.testing.assert_allclose(raw[0], [1.0, 0.0])

    def test_unobserved_entity_gets_global_statistics(self):
        m = QosMatrix.from_entries(3, 2, {(0, 0): 1.0, (1, 1): 3.0})

        raw = entity_features(m, EntityKind.USER, standardize=False)

        np.testing.assert_allclose(raw[2], [2.0, 1.0])

    def test_standardized_columns_centered(self, fixture_data):
        matrix, _, _ = fixture_data

        features = entity_features(matrix, EntityKind.SERVICE)

        np.testing.assert_allclose(features.mean(axis=0), 0.0, atol=1e-9)


class TestReliableCluster:
    """Largest-cluster statistics."""

    def test_tie_goes_to_lowest_index(self):
        labels = [0] * 3 + [1] * 5 + [2] * 5
        m = QosMatrix.from_dense(np.ones((13, 1)))

        stats = reliable_cluster(_assignment(labels, 3), m, EntityKind.USER)

        assert stats.reliable_cluster_index == 1

    def test_population_std(self):
        m = QosMatrix.from_entries(2, 3, {(0, 0): 1.0, (0, 1): 2.0, (0, 2): 3.0, (1, 0): 50.0})

        stats = reliable_cluster(_assignment([0, 1], 2), m, EntityKind.USER)

        assert stats.mu_r == pytest.approx(2.0)
        assert stats.sigma_r == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_constant_observations(self):
        m = QosMatrix.from_entries(1, 3, {(0, 0): 2.0, (0, 1): 2.0, (0, 2): 2.0})

        stats = reliable_cluster(_assignment([0], 1), m, EntityKind.USER)

        assert (stats.mu_r, stats.sigma_r) == (2.0, 0.0)

    def test_cluster_without_observations(self):
        m = QosMatrix.from_entries(3, 1, {(2, 0): 1.0})

        with pytest.raises(DegenerateClusterError):
            reliable_cluster(_assignment([0, 0, 1], 2), m, EntityKind.USER)


class TestClassifyFeedback:
    """3-sigma feedback counting."""

    def test_interval(self):
        m = QosMatrix.from_entries(1, 3, {(0, 0): 1.0, (0, 1): 1.2, (0, 2): 9.9})
        stats = ReliableClusterStats(reliable_cluster_index=0, mu_r=1.0, sigma_r=0.1)

        feedback = classify_feedback(m, stats, EntityKind.USER)

        assert (feedback[0].po, feedback[0].ne) == (2, 1)

    def test_degenerate_sigma(self):
        m = QosMatrix.from_entries(1, 2, {(0, 0): 2.0, (0, 1): 2.0})
        stats = ReliableClusterStats(reliable_cluster_index=0, mu_r=2.0, sigma_r=0.0)

        feedback = classify_feedback(m, stats, EntityKind.USER)

        assert (feedback[0].po, feedback[0].ne) == (2, 0)

    def test_unobserved_entity(self):
        m = QosMatrix.from_entries(2, 1, {(0, 0): 1.0})
        stats = ReliableClusterStats(reliable_cluster_index=0, mu_r=1.0, sigma_r=0.5)

        feedback = classify_feedback(m, stats, EntityKind.USER)

        assert feedback[1].total == 0

    def test_open_bounds(self):
        m = QosMatrix.from_entries(1, 2, {(0, 0): 0.0, (0, 1): 4.0})
        stats = ReliableClusterStats(reliable_cluster_index=0, mu_r=2.0, sigma_r=0.5)

        # Bounds 0.5 and 3.5 are excluded; both values fall outside anyway.
        feedback = classify_feedback(m, stats, EntityKind.USER)

        assert feedback[0].po == 0

    def test_counts_are_conserved(self, fixture_data):
        matrix, _, _ = fixture_data
        table = compute_reputations(matrix, RcmConfig(n_user_clusters=3, n_service_clusters=4))

        n = len(matrix)
        assert int(table.users.po.sum() + table.users.ne.sum()) == n
        assert int(table.services.po.sum() + table.services.ne.sum()) == n


class TestReputation:
    """Logit closed form."""

    def test_balanced_feedback_is_neutral(self):
        assert reputation(FeedbackVector(po=7, ne=7), 0.3).value == 0.5

    def test_saturation_without_overflow(self):
        assert reputation(FeedbackVector(po=10**6, ne=0), 1.0).value == pytest.approx(1.0, abs=1e-15)
        assert reputation(FeedbackVector(po=10**9, ne=0), 1.0).value == 1.0

    def test_hand_computed_value(self):
        value = reputation(FeedbackVector(po=50, ne=150), 0.01).value

        assert value == pytest.approx(1.0 / (1.0 + math.e), abs=1e-12)

    def test_non_positive_beta(self):
        with pytest.raises(ConfigError):
            reputation(FeedbackVector(po=1, ne=0), 0.0)

    def test_identities_on_random_triples(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            po, ne = (int(x) for x in rng.integers(0, 500, size=2))
            beta = float(rng.uniform(1e-3, 2.0))
            p1, p2 = feedback_probabilities(FeedbackVector(po=po, ne=ne), beta)
            forward = reputation(FeedbackVector(po=po, ne=ne), beta).value
            mirrored = reputation(FeedbackVector(po=ne, ne=po), beta).value

            assert abs(p1 + p2 - 1.0) < 1e-12
            assert abs(forward + mirrored - 1.0) < 1e-12
            assert 0.0 <= forward <= 1.0

    def test_strict_monotonicity(self):
        values = reputation_array(np.arange(0, 40), np.full(40, 20), 0.05)
        assert np.all(np.diff(values) > 0)

        values = reputation_array(np.full(40, 20), np.arange(0, 40), 0.05)
        assert np.all(np.diff(values) < 0)

    def test_matches_naive_logit(self):
        for po in range(0, 16):
            for ne in range(0, 31 - po):
                for beta in (0.01, 0.5, 1.0):
                    e_po, e_ne = math.exp(beta * po), math.exp(beta * ne)
                    p1 = e_po / (e_po + e_ne)
                    p2 = e_ne / (e_po + e_ne)
                    naive = p1 / (p1 + p2)

                    stable = reputation(FeedbackVector(po=po, ne=ne), beta).value

                    assert abs(naive - stable) < 1e-12


class TestComputeReputations:
    """Full pipeline and its output file."""

    def test_covers_every_entity_of_a_sparse_split(self, fixture_data):
        matrix, _, _ = fixture_data
        split = split_by_density(matrix, SplitSpec(density=0.2, seed=4))

        table = compute_reputations(split.train, RcmConfig(n_user_clusters=2, n_service_clusters=3), seed=4)

        assert table.users.reputations.shape == (matrix.n_users,)
        assert table.services.reputations.shape == (matrix.n_services,)
        assert np.all((table.users.reputations >= 0) & (table.users.reputations <= 1))
        unseen = np.bincount(split.train.users, minlength=matrix.n_users) == 0
        np.testing.assert_array_equal(table.users.reputations[unseen], 0.5)

    def test_same_seed_same_reputations(self, fixture_data):
        matrix, _, _ = fixture_data
        config = RcmConfig(n_user_clusters=3, n_service_clusters=3)

        a = compute_reputations(matrix, config, seed=9)
        b = compute_reputations(matrix, config, seed=9)

        np.testing.assert_array_equal(a.users.reputations, b.users.reputations)
        np.testing.assert_array_equal(a.services.reputations, b.services.reputations)

    def test_write_is_deterministic(self, tmp_path, fixture_data):
        matrix, _, _ = fixture_data
        config = RcmConfig(n_user_clusters=2, n_service_clusters=3)

        first = write_reputations(compute_reputations(matrix, config, seed=1), tmp_path / "a" / "reputations.csv")
        second = write_reputations(compute_reputations(matrix, config, seed=1), tmp_path / "b" / "reputations.csv")

        assert first.read_bytes() == second.read_bytes()
        frame = pd.read_csv(first)
        assert list(frame.columns) == ["kind", "index", "po", "ne", "reputation"]
        assert (frame["kind"] == "user").sum() == matrix.n_users
        assert (frame["kind"] == "service").sum() == matrix.n_services
        assert (tmp_path / "a" / "reputations_summary.json").exists()
