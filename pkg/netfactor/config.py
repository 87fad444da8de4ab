from __future__ import annotations

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level settings loaded from environment variables / .env.

    Solver knobs are not here: they travel with each run as FactorConfig.
    """

    model_config = SettingsConfigDict(
        env_prefix="NETFACTOR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = "INFO"

    # Bundled experiment configs (flat JSON, one per protocol/table).
    experiments_dir: Path = Path("experiments")
    # Default destination for reports, factors and traces.
    output_dir: Path = Path("out")

    # Trial fan-out width for the experiment runner. 1 keeps everything serial.
    workers: int = 1
    default_trials: int = 100


def get_settings() -> Settings:
    return Settings()
