"""
Configuration Manager - TOML/JSON run configuration loading and provenance.

This module loads a run configuration document, validates it against
RunConfig, resolves file paths relative to the document's own directory,
and writes the resolved copy plus the seed into every run directory.
"""

import json
import logging
import sys
from pathlib import Path
from threading import Lock
from typing import Any, Dict, Optional

from pydantic import ValidationError as PydanticValidationError

from sentifuse.core.config_schemas import RunConfig
from sentifuse.core.exceptions import ConfigurationError
from sentifuse.core.utils import PathLike, atomic_write_json, atomic_write_text

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


logger = logging.getLogger(__name__)

CONFIG_SUFFIXES = (".toml", ".json")
RESOLVED_CONFIG_NAME = "config.json"
SEED_FILE_NAME = "seed.txt"

_PATH_KEYS = (
    ("paths", "text_manifest"),
    ("paths", "audio_manifest"),
    ("paths", "video_table"),
    ("paths", "work_dir"),
    ("text", "stopwords_file"),
    ("text", "lemma_rules_file"),
    ("text", "lemma_exceptions_file"),
)


def format_validation_error(error: PydanticValidationError) -> str:
    problems = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        problems.append(f"{location}: {item['msg']}")
    return "; ".join(problems)


def read_config_document(path: PathLike) -> Dict[str, Any]:
    """
    Parse a TOML or JSON configuration file into a plain dictionary.

    Raises:
        ConfigurationError: Missing file, unsupported suffix or syntax error
    """
    source = Path(path)
    if source.suffix.lower() not in CONFIG_SUFFIXES:
        raise ConfigurationError(
            f"unsupported config format '{source.suffix}' (expected .toml or .json)",
            config_path=str(source),
        )
    if not source.exists():
        raise ConfigurationError(f"config file not found: {source}", config_path=str(source))
    try:
        if source.suffix.lower() == ".toml":
            with open(source, "rb") as f:
                data = tomllib.load(f)
        else:
            with open(source, "r", encoding="utf-8") as f:
                data = json.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot parse {source}: {e}", config_path=str(source))
    if not isinstance(data, dict):
        raise ConfigurationError("config document must be a table of sections", config_path=str(source))
    return data


def validate_config(data: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(
            f"invalid configuration: {format_validation_error(e)}", config_path=config_path
        )


class ConfigManager:
    """
    Holds the validated RunConfig of one invocation.

    Relative paths in the document are resolved against the directory that
    contains it, so a config file and its data can be archived together.
    """

    def __init__(self, config_path: Optional[PathLike] = None, base_dir: Optional[PathLike] = None):
        """
        Initialize configuration manager.

        Args:
            config_path: TOML or JSON file; built-in defaults when omitted
            base_dir: Directory for resolving relative paths; defaults to
                      the config file's directory, else the working directory
        """
        self._lock = Lock()
        self.config_path = Path(config_path) if config_path is not None else None
        if base_dir is not None:
            self.base_dir = Path(base_dir)
        elif self.config_path is not None:
            self.base_dir = self.config_path.resolve().parent
        else:
            self.base_dir = Path.cwd()

        if self.config_path is None:
            data: Dict[str, Any] = {}
            logger.debug("No config file given, using defaults")
        else:
            data = read_config_document(self.config_path)
        raw = validate_config(data, str(self.config_path) if self.config_path else None)
        self._config = self._resolve_paths(raw)
        logger.debug(f"Configuration loaded (seed={self._config.seed})")

    @classmethod
    def from_config(cls, config: RunConfig, base_dir: Optional[PathLike] = None) -> "ConfigManager":
        """Wrap an already-built RunConfig (tests, programmatic runs)."""
        manager = cls.__new__(cls)
        manager._lock = Lock()
        manager.config_path = None
        manager.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        manager._config = manager._resolve_paths(config)
        return manager

    def _resolve_paths(self, config: RunConfig) -> RunConfig:
        data = config.model_dump(mode="json")
        for section, key in _PATH_KEYS:
            value = data[section][key]
            if value is None:
                continue
            path = Path(value).expanduser()
            if not path.is_absolute():
                path = self.base_dir / path
            data[section][key] = str(path)
        return validate_config(data, str(self.config_path) if self.config_path else None)

    @property
    def config(self) -> RunConfig:
        with self._lock:
            return self._config

    @property
    def work_dir(self) -> Path:
        return Path(self.config.paths.work_dir)

    def get_setting(self, key_path: str, default: Any = None) -> Any:
        """
        Get a setting using dot notation (e.g. 'train.batch_size').

        Returns:
            The setting value or ``default`` when the path does not exist
        """
        current: Any = self.config.model_dump(mode="json")
        try:
            for key in key_path.split("."):
                current = current[key]
            return current
        except (KeyError, TypeError):
            return default

    def override(self, key_path: str, value: Any) -> RunConfig:
        """
        Replace one setting and revalidate the whole document.

        Raises:
            ConfigurationError: If the key path is unknown or the value invalid
        """
        with self._lock:
            data = self._config.model_dump(mode="json")
            keys = key_path.split(".")
            current = data
            for key in keys[:-1]:
                if not isinstance(current, dict) or key not in current:
                    raise ConfigurationError(f"invalid setting path: {key_path}")
                current = current[key]
            if not isinstance(current, dict) or keys[-1] not in current:
                raise ConfigurationError(f"invalid setting key: {key_path}")
            current[keys[-1]] = value
            self._config = validate_config(data)
            logger.debug(f"Setting overridden: {key_path} = {value!r}")
            return self._config

    def write_resolved(self, run_dir: PathLike) -> Path:
        """
        Record provenance in ``run_dir``: the resolved config and the seed.

        Returns:
            Path of the written config.json
        """
        directory = Path(run_dir)
        config = self.config
        target = atomic_write_json(directory / RESOLVED_CONFIG_NAME, config.model_dump(mode="json"))
        atomic_write_text(directory / SEED_FILE_NAME, f"{config.seed}\n")
        return target


def load_config(path: Optional[PathLike] = None) -> RunConfig:
    """Shortcut: validated, path-resolved RunConfig from ``path``."""
    return ConfigManager(path).config


__all__ = [
    "CONFIG_SUFFIXES",
    "RESOLVED_CONFIG_NAME",
    "SEED_FILE_NAME",
    "format_validation_error",
    "read_config_document",
    "validate_config",
    "ConfigManager",
    "load_config",
]
