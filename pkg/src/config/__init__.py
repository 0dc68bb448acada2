"""
Configuration management for the RAHN toolkit.
"""

from .config_manager import SEED_ENV_VAR, ConfigManager, load_experiment_config

__all__ = ["ConfigManager", "SEED_ENV_VAR", "load_experiment_config"]
