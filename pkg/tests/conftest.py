"""
Shared fixtures for the RAHN test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.data.synthetic import generate_fixture
from src.models.experiment import ExperimentConfig, RahnConfig
from src.models.qos import QosMatrix
from src.utils.logger import configure_logging, reset_loggers


@pytest.fixture(autouse=True)
def isolated_logging(tmp_path):
    """Route log files into the test's temp directory."""
    configure_logging(log_dir=str(tmp_path / "logs"), level="WARNING")
    yield
    reset_loggers()


@pytest.fixture
def small_matrix() -> QosMatrix:
    """3 users x 4 services with two gaps."""
    dense = np.array([
        [0.5, 1.0, -1.0, 2.0],
        [0.4, -1.0, 3.0, 2.5],
        [0.6, 1.1, 2.9, 1.9],
    ])
    return QosMatrix.from_dense(dense)


@pytest.fixture
def fixture_data():
    """Seeded 20 x 30 synthetic matrix with region metadata."""
    return generate_fixture(n_users=20, n_services=30, rank=2, density=0.5, seed=7)


@pytest.fixture
def tiny_rahn_config() -> RahnConfig:
    return RahnConfig(d=4, n_stack=1, use_pe=False, lambda_reg=0.0, seed=3)


@pytest.fixture
def fixture_experiment_config(tmp_path) -> ExperimentConfig:
    """Desk-scale experiment settings writing under tmp_path."""
    return ExperimentConfig.model_validate({
        "paths": {"output_dir": str(tmp_path / "out")},
        "rcm": {"n_user_clusters": 2, "n_service_clusters": 3},
        "model": {"d": 4, "n_stack": 1, "batch_size": 32, "epochs": 2, "learning_rate": 0.01},
        "protocol": {"densities": [0.5], "seed": 11},
        "logging": {"log_dir": str(tmp_path / "logs"), "level": "WARNING"},
    })
