from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s - %(message)s"


def configure_logging(level_name: str, log_file: str) -> Path:
    level = logging.getLevelNamesMapping().get(level_name.upper(), logging.INFO)
    log_path = Path(log_file).expanduser()
    log_path.parent.mkdir(parents=True, exist_ok=True)

    handler = RotatingFileHandler(
        log_path,
        maxBytes=5 * 1024 * 1024,
        backupCount=5,
        encoding="utf-8",
    )
    handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root = logging.getLogger()
    root.setLevel(level)
    # replace only file handlers from an earlier call; foreign handlers stay attached
    for existing in [h for h in root.handlers if isinstance(h, RotatingFileHandler)]:
        root.removeHandler(existing)
        existing.close()
    root.addHandler(handler)

    # IntegrationWarning / OptimizeWarning from scipy end up in the log file
    logging.captureWarnings(True)
    return log_path
