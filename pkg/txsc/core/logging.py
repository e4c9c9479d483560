"""
Logging configuration for the toolkit.

Log records go to stderr so that machine-readable output written by the
CLI on stdout is never interleaved with diagnostics.
"""

import logging
import sys
from typing import Optional

from .config import get_settings


def setup_logging(log_level: Optional[str] = None) -> None:
    """
    Configure toolkit logging.

    Args:
        log_level: Optional log level override. If not provided,
                  uses the level from settings.
    """
    settings = get_settings()
    level = (log_level or settings.log_level).upper()

    logging.basicConfig(
        level=getattr(logging, level),
        format=settings.log_format,
        handlers=[
            logging.StreamHandler(sys.stderr),
        ],
        force=True,
    )

    # Reduce noise from the parser generator
    logging.getLogger("lark").setLevel(logging.WARNING)

    app_logger = logging.getLogger("txsc")
    app_logger.setLevel(getattr(logging, level))


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        name: Name of the logger, typically __name__ of the calling module

    Returns:
        Logger: Logger namespaced under `txsc`
    """
    if name.startswith("txsc.") or name == "txsc":
        return logging.getLogger(name)
    return logging.getLogger(f"txsc.{name}")
