# logger.py

import logging
import os
from datetime import datetime
from pathlib import Path

from .config import LOGGER_NAME, DEFAULT_LOG_DIR


def _debug_enabled():
    return os.getenv("DEBUG", "false").lower() == "true"


def setup_logger(name=LOGGER_NAME, level=None):
    """
    Setup logger for the simulator

    Args:
        name (str): Logger name
        level: Logging level (default: INFO, DEBUG when DEBUG=true)

    Returns:
        logging.Logger: Configured logger instance
    """
    if level is None:
        level = logging.DEBUG if _debug_enabled() else logging.INFO

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
    )
    simple_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s'
    )

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(simple_formatter)
    logger.addHandler(console_handler)

    # Daily log file unless debugging on a terminal
    if not _debug_enabled():
        logs_dir = Path(os.getenv("GCSSIM_LOG_DIR", DEFAULT_LOG_DIR))
        logs_dir.mkdir(parents=True, exist_ok=True)

        log_file = logs_dir / f"{LOGGER_NAME}_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        logger.addHandler(file_handler)

    return logger


def get_logger(name=LOGGER_NAME):
    """
    Get logger instance. Module loggers ("gcssim.engine", ...) propagate
    to the package logger configured by setup_logger.

    Args:
        name (str): Logger name

    Returns:
        logging.Logger: Logger instance
    """
    return logging.getLogger(name)


def set_console_level(level):
    """Raise or lower the console handler threshold (used by --quiet)."""
    for handler in logging.getLogger(LOGGER_NAME).handlers:
        if type(handler) is logging.StreamHandler:
            handler.setLevel(level)


logger = setup_logger()

__all__ = ['setup_logger', 'get_logger', 'set_console_level', 'logger']
