"""Configuration management."""

from .config_loader import ConfigLoader, DataSource, ExperimentConfig, METHOD_NAMES

__all__ = ['ConfigLoader', 'DataSource', 'ExperimentConfig', 'METHOD_NAMES']
