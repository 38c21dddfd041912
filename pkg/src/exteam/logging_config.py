"""Logging configuration for exteam.

Log lines go to stderr so stdout stays clean for CSV rows. Python warnings
(numpy overflow in likelihood ratios, scipy solver notices) are captured and
routed through the same handlers.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path

_configured = False

PACKAGE_LOGGER = "exteam"
WARNINGS_LOGGER = "py.warnings"

_FORMAT = "%(asctime)s %(levelname)-5s [%(name)s] %(message)s"


def _targets() -> list[logging.Logger]:
    return [logging.getLogger(PACKAGE_LOGGER), logging.getLogger(WARNINGS_LOGGER)]


def setup_logging(level: int = logging.INFO) -> None:
    """Configure the exteam logger. Idempotent; format HH:MM:SS LEVEL [module] message."""
    global _configured
    if _configured:
        return
    _configured = True

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%H:%M:%S"))

    root = logging.getLogger(PACKAGE_LOGGER)
    root.setLevel(level)
    root.addHandler(handler)

    logging.captureWarnings(True)
    warnings_logger = logging.getLogger(WARNINGS_LOGGER)
    warnings_logger.addHandler(handler)
    warnings_logger.propagate = False


def setup_file_logging(log_dir: Path, command: str | None = None) -> logging.FileHandler:
    """Add a DEBUG file handler writing <log_dir>/[<command>_]YYYYMMDD_HHMMSS.log."""
    log_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    stem = f"{command.replace(' ', '-')}_{timestamp}" if command else timestamp

    handler = logging.FileHandler(log_dir / f"{stem}.log", encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))

    for logger in _targets():
        logger.addHandler(handler)
    return handler


def reset_logging() -> None:
    """Reset logging state. For testing only."""
    global _configured
    _configured = False
    logging.captureWarnings(False)
    for logger in _targets():
        for handler in list(logger.handlers):
            handler.close()
        logger.handlers.clear()
    logging.getLogger(PACKAGE_LOGGER).setLevel(logging.WARNING)
    logging.getLogger(WARNINGS_LOGGER).propagate = True
