"""
Configuration management for the RAHN toolkit.

Loads a single JSON experiment file, applies environment and command-line
overrides, and validates the result into an ExperimentConfig.
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from dotenv import load_dotenv
from pydantic import ValidationError as PydanticValidationError

from src.models.experiment import ExperimentConfig
from src.utils.errors import ConfigError
from src.utils.io import atomic_write_json

SEED_ENV_VAR = "RAHN_SEED"


class ConfigManager:
    """
    Manages experiment configuration.

    Precedence, lowest first: built-in defaults, the JSON config file, the
    RAHN_SEED environment variable, explicit ``key=value`` overrides.
    """

    def __init__(self, config_path: Optional[str] = None, use_env: bool = True) -> None:
        """
        Initialize configuration manager.

        Args:
            config_path: JSON config file; None means defaults only
            use_env: Whether to read .env and the RAHN_SEED variable
        """
        self.config_path = Path(config_path) if config_path else None
        self.use_env = use_env

        # In-memory configuration
        self.config: Dict[str, Any] = {}

        self.load_config()

    def load_config(self) -> None:
        """Load configuration from file, then apply the environment."""
        self.config = self._get_default_config()

        if self.config_path is not None:
            if not self.config_path.exists():
                raise ConfigError(f"config file not found: {self.config_path}")
            try:
                with open(self.config_path, 'r') as f:
                    file_config = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file {self.config_path} is not valid JSON: {e}") from e
            if not isinstance(file_config, dict):
                raise ConfigError(f"config file {self.config_path} must hold a JSON object")
            self._merge(self.config, file_config)

        if self.use_env:
            load_dotenv(override=False)
            env_seed = os.environ.get(SEED_ENV_VAR)
            if env_seed:
                try:
                    self.set("protocol.seed", int(env_seed))
                except ValueError as e:
                    raise ConfigError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from e

    def save_config(self, path: Optional[str] = None) -> Path:
        """Save the current (unvalidated) configuration as JSON."""
        target = Path(path) if path else self.config_path
        if target is None:
            raise ConfigError("no path to save configuration to")
        return atomic_write_json(target, self.config)

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return ExperimentConfig().model_dump(mode="json")

    @staticmethod
    def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> None:
        """Recursively merge ``update`` into ``base``."""
        for key, value in update.items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                ConfigManager._merge(base[key], value)
            else:
                base[key] = copy.deepcopy(value)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value.

        Args:
            key: Configuration key (supports dot notation, e.g., "model.d")
            default: Default value if key not found

        Returns:
            Configuration value
        """
        keys = key.split('.')
        value: Any = self.config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default

        return value

    def set(self, key: str, value: Any) -> None:
        """
        Set configuration value.

        Args:
            key: Configuration key (supports dot notation)
            value: Value to set
        """
        keys = key.split('.')
        config = self.config

        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def apply_overrides(self, overrides: Iterable[str]) -> None:
        """
        Apply ``key=value`` overrides (the CLI's repeated --set flag).

        Values are decoded as JSON when possible, so ``model.d=8`` sets an int
        and ``protocol.densities=[0.02,0.04]`` a list; anything else is a string.
        """
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"override {item!r} has an empty key")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            self.set(key, value)

    def resolve(self) -> ExperimentConfig:
        """
        Validate the merged configuration.

        Returns:
            ExperimentConfig

        Raises:
            ConfigError: If any field is invalid
        """
        try:
            return ExperimentConfig.model_validate(self.config)
        except PydanticValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"invalid configuration: {problems}") from e


def load_experiment_config(
    config_path: Optional[str] = None,
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
    use_env: bool = True,
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig from file, environment and overrides.

    Args:
        config_path: JSON config file (None for defaults)
        overrides: ``key=value`` strings
        seed: Explicit seed flag; wins over everything else
        use_env: Whether RAHN_SEED and .env are consulted

    Returns:
        Validated ExperimentConfig
    """
    manager = ConfigManager(config_path, use_env=use_env)
    manager.apply_overrides(overrides)
    if seed is not None:
        manager.set("protocol.seed", seed)
    return manager.resolve()
