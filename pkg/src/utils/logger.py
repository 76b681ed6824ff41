"""Project-wide logging: one timestamped file per CLI invocation plus the console."""

import logging
import os
import sys
from datetime import datetime
from typing import Optional


LOGGER_NAME = 'gpr_triage'

DETAILED_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
CONSOLE_FORMAT = '%(levelname)s - %(message)s'


def setup_logger(name: str = LOGGER_NAME,
                 log_dir: str = 'logs',
                 level: int = logging.INFO,
                 run_label: Optional[str] = None) -> logging.Logger:
    """
    Configure the project logger with a DEBUG file handler and a console handler.

    Calling it again does not add handlers; it only moves the console
    handler to the new level.

    Args:
        name: Logger name, normally the project root logger
        log_dir: Directory for log files
        level: Console logging level (the file always records DEBUG)
        run_label: Optional tag placed in the log file name, e.g. the subcommand

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    console = _console_handler(logger)
    if console is not None:
        console.setLevel(level)
        return logger

    os.makedirs(log_dir, exist_ok=True)
    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    stem = f'triage_{run_label}_{timestamp}' if run_label else f'triage_{timestamp}'
    log_file = os.path.join(log_dir, f'{stem}.log')

    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(DETAILED_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))

    console = logging.StreamHandler(sys.stdout)
    console.setLevel(level)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT))

    logger.addHandler(file_handler)
    logger.addHandler(console)

    logger.debug(f"Logging initialized - File: {log_file}")
    return logger


def log_file_path(name: str = LOGGER_NAME) -> Optional[str]:
    """Path of the file the project logger writes to, if one is configured."""
    for handler in logging.getLogger(name).handlers:
        if isinstance(handler, logging.FileHandler):
            return handler.baseFilename
    return None


def get_logger(component: str) -> logging.Logger:
    """Return a child of the project logger so records reach its handlers."""
    return logging.getLogger(f'{LOGGER_NAME}.{component}')


def _console_handler(logger: logging.Logger) -> Optional[logging.Handler]:
    for handler in logger.handlers:
        # FileHandler subclasses StreamHandler
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
            return handler
    return None
