from __future__ import annotations

import logging
from dataclasses import dataclass
from os import getenv
from pathlib import Path

DEFAULT_OUTPUT_DIR = "results"
DEFAULT_LOG_FILE = "logs/lorentz-distance.log"


@dataclass(slots=True)
class Settings:
    output_dir: Path
    log_level: str
    log_file: str


class SettingsError(RuntimeError):
    pass


class ScenarioError(SettingsError):
    pass


def load_settings(log_level: str = "INFO", log_file: str = DEFAULT_LOG_FILE) -> Settings:
    output_dir_raw = getenv("LORENTZ_DISTANCE_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)
    if not output_dir_raw.strip():
        raise SettingsError("LORENTZ_DISTANCE_OUTPUT_DIR must not be empty")

    level = log_level.upper()
    if level not in logging.getLevelNamesMapping():
        raise SettingsError(f"--log-level must be a valid logging level name, got {log_level!r}")

    if not log_file.strip():
        raise SettingsError("--log-file must not be empty")

    return Settings(
        output_dir=Path(output_dir_raw).expanduser(),
        log_level=level,
        log_file=log_file,
    )
