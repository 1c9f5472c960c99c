"""
Configuration settings for the fBm Legendre expansion toolkit.
This file defines environment-based settings: working precision, thread count,
logging level, result cache location and validation tolerances, using Pydantic.
"""
import os
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings."""

    # App settings
    APP_NAME: str = "fBm Legendre Expansion"
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = "WARNING"

    # Numerical settings
    FBM_PRECISION_BITS: int = 320
    FBM_THREADS: int = os.cpu_count() or 1
    DEFAULT_HORIZON: str = "1"

    # Result cache (error table cells)
    DATABASE_URL: str = "sqlite+aiosqlite:///./tmp/fbm_results.db"

    # Validation tolerances
    MC_SIGMA_LIMIT: float = 4.0
    GRAM_TOLERANCE: float = 1e-3
    ORACLE_MAX_POINTS: int = 512

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"  # Allow extra fields in environment


# Initialize settings
settings = Settings()
