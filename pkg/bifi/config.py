from pydantic_settings import BaseSettings
from pydantic import Field
from typing import Optional

class Settings(BaseSettings):
    """Global settings configuration using environment variables"""

    BIFI_WORKERS: Optional[int] = Field(
        default=None,
        description="Worker count used when --workers is not given. Defaults to the number of available cores"
    )

    OUTPUT_DIR: str = Field(
        default="report",
        description="Directory where report files will be written"
    )

    CACHE_PATH: Optional[str] = Field(
        default=None,
        description="SQLite file caching solver snapshots across runs. Caching is off when unset"
    )

    LOG_LEVEL: str = Field(
        default="INFO",
        description="Logging level for the command-line entry point"
    )

    DEFAULT_SEED: int = Field(
        default=20240521,
        description="Seed of the candidate-set generator when the run config does not set one"
    )

    VALIDATION_SEED: int = Field(
        default=7919,
        description="Seed of the validation set used for true-error and bound diagnostics"
    )

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"

settings = Settings()
