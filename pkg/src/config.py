"""
Configuration management for RC4Sim.

Runtime settings come from RC4SIM_* environment variables (a .env file in the
working directory is loaded first, without overriding variables already set).
Statistical-suite parameters live in an optional JSON file holding a partial
SuiteConfig; command-line flags override the file, which overrides the
environment defaults.
"""

import json
import logging
import os
from pathlib import Path
from typing import Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from .errors import InvalidArgumentError
from .schemas import SuiteConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "RC4SIM_"

_DOTENV_LOADED = False


class Settings(BaseModel):
    """Environment-level defaults."""
    db_path: str = "./data/pvalues.db"
    corpus_dir: str = "./corpus"
    default_key_hex: str = "0102030405"
    workers: int = Field(1, ge=1)
    log_level: str = "WARNING"


def _load_dotenv_once():
    global _DOTENV_LOADED
    if not _DOTENV_LOADED:
        load_dotenv(override=False)
        _DOTENV_LOADED = True


def load_settings(env: Optional[Mapping[str, str]] = None) -> Settings:
    """
    Read RC4SIM_DB_PATH, RC4SIM_CORPUS_DIR, RC4SIM_DEFAULT_KEY_HEX, RC4SIM_WORKERS
    and RC4SIM_LOG_LEVEL. Pass env to read from a mapping instead of os.environ.
    """
    if env is None:
        _load_dotenv_once()
        env = os.environ
    values = {}
    for field in Settings.model_fields:
        key = ENV_PREFIX + field.upper()
        if key in env and env[key] != "":
            values[field] = env[key]
    return Settings(**values)


class SuiteConfigFile:
    """A JSON file holding a partial SuiteConfig."""

    def __init__(self, path):
        self.path = Path(path)

    def load_config(self) -> Optional[dict]:
        """
        Load the stored values.

        Returns:
            Configuration dictionary or None if the file does not exist
        """
        if not self.path.exists():
            return None
        try:
            data = json.loads(self.path.read_text())
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"{self.path}: not valid JSON ({e})")
        if not isinstance(data, dict):
            raise InvalidArgumentError(f"{self.path}: expected a JSON object")
        return data

    def save_config(self, config: SuiteConfig) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(config.model_dump(mode="json"), indent=2))

    def update_config(self, patch: dict) -> dict:
        """
        Shallow-merge a patch into the stored values and persist.

        The merged values must still form a valid SuiteConfig.
        """
        config = dict(self.load_config() or {})
        if isinstance(patch, dict):
            config.update(patch)
        SuiteConfig(**config)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(config, indent=2))
        return config


def resolve_suite_config(config_path: Optional[str] = None, settings: Optional[Settings] = None,
                         **overrides) -> SuiteConfig:
    """
    Environment defaults, then the config file, then non-None overrides.

    Raises pydantic.ValidationError when the merged values are invalid.
    """
    settings = settings or load_settings()
    values = {"workers": settings.workers}
    if config_path is not None:
        stored = SuiteConfigFile(config_path).load_config()
        if stored is None:
            raise InvalidArgumentError(f"config file not found: {config_path}")
        values.update(stored)
        logger.info("suite config loaded from %s", config_path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SuiteConfig(**values)
