"""
Configuration management for the txsc toolkit.

This module handles all configuration settings, environment variables,
and toolkit constants. Every value can be overridden with a `TXSC_`
prefixed environment variable or a `.env` file.
"""

import logging
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_REPO_ROOT = Path(__file__).resolve().parents[2]


class Settings(BaseSettings):
    """
    Toolkit settings loaded from environment variables.

    Defaults reproduce the bundled corpus recipes; scenario files and
    transform configs override the simulation and rewriting knobs per run.
    """

    # Application settings
    app_name: str = Field(default="txsc", description="Toolkit name")
    app_version: str = Field(default="1.0.0", description="Toolkit version")

    # Logging settings
    log_level: str = Field(default="WARNING", description="Logging level")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string"
    )

    # Corpus settings
    corpus_dir: Path = Field(
        default=_REPO_ROOT / "corpus",
        description="Directory holding bundled contracts, scenarios and golden files"
    )

    # Simulation defaults
    default_seed: int = Field(default=7, description="Seed used when a run does not pin one")
    block_interval_ticks: int = Field(default=10, description="Ticks between blocks on every chain")
    default_gas: int = Field(default=100, description="Gas budget for calls that do not set one")
    default_funds: int = Field(default=10_000, description="Starting funds of an unknown account")

    # Transform defaults
    deposit_amount: int = Field(default=10, description="Escrow deposit at CDTF entry points")
    lock_chain: str = Field(default="lockchain", description="Identifier of the lock-manager chain")

    # Serializability oracle
    permutation_bound: int = Field(default=8, description="Max spans for the permutation oracle")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate that the log level is a known logging level name."""
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @field_validator("block_interval_ticks", "permutation_bound")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Intervals and bounds must be strictly positive."""
        if v <= 0:
            raise ValueError("value must be positive")
        return v

    @field_validator("default_gas", "default_funds", "deposit_amount")
    @classmethod
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("value must not be negative")
        return v

    @property
    def contracts_dir(self) -> Path:
        return self.corpus_dir / "contracts"

    @property
    def scenarios_dir(self) -> Path:
        return self.corpus_dir / "scenarios"

    @property
    def golden_dir(self) -> Path:
        return self.corpus_dir / "golden"

    model_config = SettingsConfigDict(
        env_prefix="TXSC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """
    Return the process-wide settings instance.

    Returns:
        Settings: The global settings instance
    """
    return settings
