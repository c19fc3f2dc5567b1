"""
Configuration settings for the dilation toolkit.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings, overridable through DILATION_* environment variables or .env."""

    model_config = SettingsConfigDict(
        env_prefix="DILATION_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Output
    output_dir: str = "."

    # Resource caps
    support_cap: int = 2_000_000  # keys per exact measure / support set
    float_support_cap: int = 50_000_000  # entries in float diagnostics
    oracle_cap: int = 1_000_000  # digit tuples enumerated by the oracle
    raster_depth_cap: int = 18  # total sampling digits per raster cell

    # Cascade / transfer defaults
    probe_depth: int = 12  # n used for observed translates
    float_tolerance: float = 1e-6

    # Workers
    threads: int = 1

    # Reproducibility
    seed: int = 20240611
    det_samples: int = 20


# Global settings instance
settings = Settings()
