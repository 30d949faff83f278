"""Configuration management for the gptent toolkit."""

import logging
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix ``GPTENT_``)."""

    # Logging
    log_level: str = Field(
        default="WARNING",
        description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )
    log_json: bool = Field(
        default=False,
        description="Render log events as JSON lines instead of console text"
    )

    # Numerics
    tolerance: float = Field(
        default=1e-9,
        description="Tolerance for comparisons between entropy values in bits"
    )
    seed: int = Field(
        default=0,
        description="Default seed for every sampling routine"
    )
    max_outcomes: int = Field(
        default=24,
        description="Largest outcome set accepted by vertex enumeration"
    )

    # Sampling
    scan_sample_count: int = Field(
        default=64,
        description="Random mixtures evaluated by the monoentropicity scan"
    )
    oracle_sample_count: int = Field(
        default=100_000,
        description="Samples drawn by the mixing-entropy random-search oracle"
    )

    # Output
    entropy_decimals: int = Field(
        default=12,
        description="Decimal digits printed for entropy values"
    )
    output_width: int = Field(
        default=100,
        description="Terminal width used for table output"
    )
    color: bool = Field(
        default=True,
        description="Colorize console log output"
    )

    model_config = SettingsConfigDict(
        env_prefix="GPTENT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, v: str) -> str:
        """Normalize the level name and reject unknown levels."""
        level = v.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"GPTENT_LOG_LEVEL must be a logging level name, got {v!r}")
        return level

    @field_validator("tolerance")
    @classmethod
    def check_tolerance(cls, v: float) -> float:
        if not 0 < v < 1e-3:
            raise ValueError("GPTENT_TOLERANCE must lie in (0, 1e-3)")
        return v


# Global settings instance
settings: Optional[Settings] = None


def load_settings() -> Settings:
    """Load and validate settings from environment."""
    global settings
    if settings is None:
        settings = Settings()
    return settings


def get_settings() -> Settings:
    """Get current settings instance."""
    if settings is None:
        return load_settings()
    return settings


def reset_settings() -> None:
    """Drop the cached settings so the next access re-reads the environment."""
    global settings
    settings = None
