"""
Logging configuration module
"""
import logging
import sys
from pathlib import Path
from typing import Optional

from ..config.settings import settings

ROOT_LOGGER_NAME = "torus_lab"


def setup_logger(
    name: str,
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    format_string: Optional[str] = None
) -> logging.Logger:
    """Setup a project logger below the ``torus_lab`` namespace"""
    if not name.startswith(ROOT_LOGGER_NAME):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    logger = logging.getLogger(name)

    # Avoid duplicate setup
    if logger.handlers:
        return logger

    log_level = level or settings.log_level
    logger.setLevel(getattr(logging, log_level.upper()))

    formatter = logging.Formatter(format_string or settings.log_format)

    # Console handler, only on the root project logger; children propagate
    if name == ROOT_LOGGER_NAME:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        file_path = log_file or settings.log_file
        if file_path:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(file_path)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)
    else:
        logger.addHandler(logging.NullHandler())

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get logger instance"""
    return setup_logger(name)


def set_verbosity(verbose: bool) -> None:
    """Switch the whole project logger tree between INFO and DEBUG"""
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper())
    logging.getLogger(ROOT_LOGGER_NAME).setLevel(level)
    for logger_name, logger in logging.root.manager.loggerDict.items():
        if logger_name.startswith(ROOT_LOGGER_NAME + ".") and isinstance(logger, logging.Logger):
            logger.setLevel(level)


# Default logger instance
default_logger = get_logger(ROOT_LOGGER_NAME)
