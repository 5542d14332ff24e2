"""Configuration management for the multi-objective PBT toolkit."""

import logging

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MOPBT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore"  # Ignore extra environment variables
    )

    # Worker pool size used when a config does not set one
    workers: int = 4

    # Default experiment output directory
    out_dir: str = "results"

    # Logging configuration
    log_level: str = "INFO"
    log_format: str = "console"

    @field_validator('workers')
    @classmethod
    def validate_workers(cls, v):
        if v < 1:
            raise ValueError('MOPBT_WORKERS must be at least 1')
        return v

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f'MOPBT_LOG_LEVEL must be a logging level name, got {v}')
        return level

    @field_validator('log_format')
    @classmethod
    def validate_log_format(cls, v):
        if v not in ("console", "json"):
            raise ValueError('MOPBT_LOG_FORMAT must be "console" or "json"')
        return v


# Global settings instance
settings = Settings()
