"""
Settings Module
Environment-level defaults loaded from the process environment and an optional .env file
"""
import os
from pathlib import Path
from typing import Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, Field, ValidationError

from .errors import ConfigurationError

ENV_WORKERS = "SGD_BOUNDS_WORKERS"
ENV_OUTPUT_DIR = "SGD_BOUNDS_OUTPUT_DIR"
ENV_LOG_LEVEL = "SGD_BOUNDS_LOG_LEVEL"


class Settings(BaseModel):
    """Defaults that command-line flags and campaign files override"""

    workers: int = Field(default=1, ge=1)
    output_dir: Optional[Path] = None
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls, dotenv: bool = True) -> "Settings":
        """
        Read SGD_BOUNDS_* variables, loading .env first when asked

        Returns:
            Settings with unset variables left at their defaults
        """
        if dotenv:
            load_dotenv(find_dotenv(usecwd=True))
        values = {}
        if os.getenv(ENV_WORKERS):
            values["workers"] = os.getenv(ENV_WORKERS)
        if os.getenv(ENV_OUTPUT_DIR):
            values["output_dir"] = os.getenv(ENV_OUTPUT_DIR)
        if os.getenv(ENV_LOG_LEVEL):
            values["log_level"] = os.getenv(ENV_LOG_LEVEL).upper()
        try:
            return cls.model_validate(values)
        except ValidationError as exc:
            fields = ", ".join(f"SGD_BOUNDS_{'_'.join(map(str, e['loc'])).upper()}" for e in exc.errors())
            raise ConfigurationError(f"invalid environment setting: {fields}") from None
