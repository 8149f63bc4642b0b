import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

from src.config.config_manager import PROJECT_ROOT, config_manager

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level_override: Optional[str] = None) -> bool:
    """
    Configures the logging system based on settings in config.ini.

    Reads the 'LOGGING' section for 'enable_logging', 'log_level' and
    'log_directory'. Console output goes to stderr so stdout stays free for
    command summaries; a rotating file handler keeps the run history.

    Args:
        level_override: Level name taking precedence over 'log_level'.

    Returns:
        bool: True if logging was enabled and set up, False otherwise.
    """
    root_logger = logging.getLogger()
    if not config_manager.get_boolean("LOGGING", "enable_logging", fallback=True):
        root_logger.setLevel(logging.CRITICAL + 1)
        return False

    log_level_str = (level_override or config_manager.get("LOGGING", "log_level", fallback="INFO")).upper()
    log_level = getattr(logging, log_level_str, logging.INFO)
    log_dir = config_manager.get("LOGGING", "log_directory", fallback="logs")
    if not os.path.isabs(log_dir):
        log_dir = os.path.join(PROJECT_ROOT, log_dir)
    log_file = os.path.join(log_dir, "poisson_be.log")

    formatter = logging.Formatter(LOG_FORMAT)
    root_logger.setLevel(log_level)
    if root_logger.hasHandlers():
        root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(log_level)
    root_logger.addHandler(console_handler)

    try:
        os.makedirs(log_dir, exist_ok=True)
        # Rotate logs: 5 files max, 5MB each
        file_handler = RotatingFileHandler(log_file, maxBytes=5 * 1024 * 1024, backupCount=5, encoding='utf-8')
        file_handler.setFormatter(formatter)
        file_handler.setLevel(log_level)
        root_logger.addHandler(file_handler)
    except OSError as e:
        console_handler.setLevel(logging.WARNING)
        logging.error(f"Failed to set up file logging in '{log_dir}'. Logging to console only. Error: {e}")
        return True

    logging.debug(f"Logging enabled. Level: {log_level_str}. Log file: '{log_file}'")
    return True
