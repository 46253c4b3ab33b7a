"""Application configuration using pydantic-settings."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Default values for CLI flags, loaded from environment variables.

    Settings only seed flag defaults; the CLI prints the resolved
    configuration before every run.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO", alias="RELN_LOG_LEVEL")

    # Parallelism
    threads: int = Field(default=1, ge=1, alias="RELN_THREADS")
    chunk_size: int = Field(default=64, ge=1, alias="RELN_CHUNK_SIZE")

    # Sampling scales
    algebra_sigma: float = Field(default=1.0, gt=0, alias="RELN_ALGEBRA_SIGMA")
    group_sigma: float = Field(default=0.5, gt=0, alias="RELN_GROUP_SIGMA")
    sp4_sigma: float = Field(default=0.4, gt=0, alias="RELN_SP4_SIGMA")

    # Evaluation
    eval_conj: int = Field(default=500, ge=1, alias="RELN_EVAL_CONJ")
    epoch_conj: int = Field(default=8, ge=1, alias="RELN_EPOCH_CONJ")
    val_fraction: float = Field(default=0.1, ge=0, lt=1, alias="RELN_VAL_FRACTION")

    # Model shape
    channels: int = Field(default=16, ge=1, alias="RELN_CHANNELS")
    head_hidden: int = Field(default=32, ge=1, alias="RELN_HEAD_HIDDEN")


# Global settings instance
settings = Settings()
