from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings

PACKAGE_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "threat-kg"
    ENVIRONMENT: str = "development"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Ontology
    SCHEMA_PATH: Optional[str] = None

    # Runs
    DEFAULT_SEED: int = 42
    EVAL_WORKERS: int = 1

    # Structured output
    OUTPUT_SCHEMA_VERSION: int = 1

    @property
    def default_schema_path(self) -> Path:
        if self.SCHEMA_PATH:
            return Path(self.SCHEMA_PATH)
        return PACKAGE_ROOT / "data" / "cti_schema.txt"

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
