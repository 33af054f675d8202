"""Environment configuration using pydantic-settings.

This module provides typed environment variable configuration with validation.
Variables are loaded once and cached for the lifetime of the process.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables.

    Experiment parameters live in the JSON experiment config; these settings
    only describe how the current process runs.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    # Parallelism
    threads: int = Field(
        default=1,
        alias="STRETCHLAB_THREADS",
        description="Cap on worker processes and intra-op threads",
    )
    device: str = Field(default="cpu", alias="STRETCHLAB_DEVICE")

    # Observability
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="INFO", alias="LOG_LEVEL"
    )
    log_json: bool = Field(default=False, alias="LOG_JSON")

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        """Reject non-positive thread caps."""
        if v < 1:
            raise ValueError("STRETCHLAB_THREADS must be >= 1")
        return v


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Validated Settings instance.
    """
    return Settings()
