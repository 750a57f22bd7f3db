"""
Application configuration using Pydantic Settings.

Environment variables are loaded from .env file. These values are the
lowest-precedence defaults for every experiment run; a config file and
command-line flags override them (see frm_cli.main).
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Reproducibility
    default_seed: int = 7

    # Detector / noise model
    default_shots: int = 10_000  # per measurement setting
    default_depolarizing_p: float = 0.0

    # Compensation experiment
    default_steps: int = 100
    default_disturbance_mode: str = "pockels_pair"  # pockels_pair | haar
    default_turn: str = "frm"  # mirror | frm

    # Identity checks and Monte Carlo oracle sizes
    identity_samples: int = 1000
    oracle_samples: int = 100_000

    # Output
    output_dir: str = "results"
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )


# Global settings instance
settings = Settings()
