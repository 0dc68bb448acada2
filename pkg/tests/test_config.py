"""
Tests for experiment configuration loading and override precedence.
"""

import json

import pytest

from src.config import SEED_ENV_VAR, ConfigManager, load_experiment_config
from src.models.experiment import ExperimentConfig, RahnConfig
from src.utils.errors import ConfigError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    """No ambient seed and no stray .env file."""
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({
        "model": {"d": 8, "n_stack": 1},
        "protocol": {"seed": 5, "densities": [0.1]},
    }))
    return path


class TestDefaults:
    """Built-in settings."""

    def test_defaults_validate(self):
        config = load_experiment_config()

        assert isinstance(config, ExperimentConfig)
        assert config.model.d == 16
        assert config.model.n_stack == 2
        assert config.rcm.n_user_clusters == 5
        assert config.rcm.n_service_clusters == 15
        assert config.model.learning_rate == 0.0005
        assert config.protocol.outlier_fraction == 0.1

    def test_token_dim_defaults_to_quarter_d(self):
        assert load_experiment_config().model.resolved_token_dim == 4


class TestPrecedence:
    """Defaults < file < RAHN_SEED < overrides < seed flag."""

    def test_file_over_defaults(self, config_file):
        config = load_experiment_config(str(config_file))

        assert config.model.d == 8
        assert config.model.use_pe is False
        assert config.protocol.seed == 5

    def test_env_over_file(self, config_file, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "77")

        assert load_experiment_config(str(config_file)).protocol.seed == 77

    def test_flag_over_env(self, config_file, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "77")

        assert load_experiment_config(str(config_file), seed=9).protocol.seed == 9

    def test_env_ignored_when_disabled(self, config_file, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "77")

        assert load_experiment_config(str(config_file), use_env=False).protocol.seed == 5

    def test_non_integer_env_seed(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "abc")

        with pytest.raises(ConfigError, match=SEED_ENV_VAR):
            load_experiment_config()


class TestOverrides:
    """--set key=value handling."""

    def test_values_decode_as_json(self, config_file):
        config = load_experiment_config(
            str(config_file),
            overrides=["model.d=32", "model.use_pe=true", "protocol.densities=[0.02,0.04]"],
        )

        assert config.model.d == 32
        assert config.model.use_pe is True
        assert config.protocol.densities == [0.02, 0.04]

    def test_plain_strings_stay_strings(self):
        config = load_experiment_config(overrides=["paths.output_dir=runs/a"])

        assert config.paths.output_dir == "runs/a"

    def test_missing_equals_sign(self):
        with pytest.raises(ConfigError):
            load_experiment_config(overrides=["model.d"])

    @pytest.mark.parametrize("override", [
        "model.d=6",
        "model.n_stack=10",
        "protocol.densities=[0.0]",
        "protocol.outlier_fraction=1.0",
        "rcm.beta=0",
        "model.token_dim=3",
    ])
    def test_invalid_values(self, override):
        with pytest.raises(ConfigError, match="invalid configuration"):
            load_experiment_config(overrides=[override])


class TestConfigFile:
    """File errors and round trips."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment_config(str(tmp_path / "absent.json"))

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{model: 8")

        with pytest.raises(ConfigError):
            load_experiment_config(str(path))

    def test_save_and_reload(self, tmp_path, config_file):
        manager = ConfigManager(str(config_file), use_env=False)
        manager.set("model.epochs", 3)

        saved = manager.save_config(str(tmp_path / "copy.json"))

        assert load_experiment_config(str(saved)).model.epochs == 3
        assert manager.get("model.d") == 8
        assert manager.get("model.missing", "x") == "x"

    def test_rahn_config_projection(self, config_file):
        config = load_experiment_config(str(config_file))

        rahn = RahnConfig.from_experiment(config)

        assert (rahn.d, rahn.n_stack, rahn.use_pe, rahn.seed) == (8, 1, False, 5)
        assert rahn.npe_label == "1008"
        assert RahnConfig.from_experiment(config, seed=2).seed == 2
