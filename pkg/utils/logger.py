"""
Logger utility for consistent logging across the toolkit.
"""
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logger(level="INFO", log_file=""):
    """
    Set up and configure the root logger.

    Console output goes to stderr so that command output on stdout stays
    machine-readable.

    Args:
        level: Logging level name (e.g. "INFO", "DEBUG")
        log_file: Optional path of a rotating log file; empty disables it

    Returns:
        The configured root logger
    """
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))

    # Repeated calls (tests, nested CLI invocations) must not stack handlers
    for handler in list(logger.handlers):
        if getattr(handler, "_selection_handler", False):
            logger.removeHandler(handler)
            handler.close()

    formatter = logging.Formatter(_FORMAT)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler._selection_handler = True
    logger.addHandler(console_handler)

    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=10485760,  # 10MB
            backupCount=5
        )
        file_handler.setFormatter(formatter)
        file_handler._selection_handler = True
        logger.addHandler(file_handler)

    return logger
