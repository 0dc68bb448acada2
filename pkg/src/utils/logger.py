"""
Logging infrastructure for the RAHN toolkit.

Provides file and console logging with rotation. Every module obtains its
logger through get_logger(), so one configuration governs the whole run.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

ROOT_LOGGER_NAME = "rahn"


class RahnLogger:
    """
    Root logger for the toolkit.

    Attaches a rotating file handler (everything from DEBUG up) and a console
    handler at the configured level to the ``rahn`` logger namespace.
    """

    def __init__(
        self,
        log_dir: str = "logs",
        log_file: str = "rahn.log",
        level: str = "INFO",
        max_file_size_mb: int = 10,
        backup_count: int = 5,
        console: bool = True,
    ) -> None:
        """
        Initialize logger.

        Args:
            log_dir: Directory for log files
            log_file: Log file name
            level: Console level name (DEBUG, INFO, WARNING, ...)
            max_file_size_mb: Size threshold before the file rotates
            backup_count: Number of rotated files to keep
            console: Whether to attach the console handler
        """
        self.log_dir = Path(log_dir)
        self.log_file = self.log_dir / log_file
        self.level = level.upper()
        self.max_file_size_mb = max_file_size_mb
        self.backup_count = backup_count

        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.logger = logging.getLogger(ROOT_LOGGER_NAME)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        # Remove existing handlers
        for handler in list(self.logger.handlers):
            handler.close()
        self.logger.handlers.clear()

        self.file_formatter = logging.Formatter(
            fmt='%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        self.console_formatter = logging.Formatter(
            fmt='%(asctime)s - %(levelname)s - %(message)s',
            datefmt='%H:%M:%S'
        )

        self._setup_file_handler()
        if console:
            self._setup_console_handler()

    def _setup_file_handler(self) -> None:
        """Set up rotating file handler."""
        file_handler = RotatingFileHandler(
            self.log_file,
            maxBytes=self.max_file_size_mb * 1024 * 1024,
            backupCount=self.backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)  # File gets all logs
        file_handler.setFormatter(self.file_formatter)

        self.logger.addHandler(file_handler)

    def _setup_console_handler(self) -> None:
        """Set up console handler."""
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, self.level, logging.INFO))
        console_handler.setFormatter(self.console_formatter)

        self.logger.addHandler(console_handler)

    def get_logger(self) -> logging.Logger:
        """
        Get underlying logger instance.

        Returns:
            logging.Logger instance
        """
        return self.logger


# Global logger instance
_logger: Optional[RahnLogger] = None


def configure_logging(
    log_dir: str = "logs",
    level: str = "INFO",
    max_file_size_mb: int = 10,
    backup_count: int = 5,
    console: bool = True,
) -> logging.Logger:
    """
    (Re)configure the toolkit's root logger.

    Called once by the CLI after the configuration is resolved. Library use
    without this call falls back to defaults on first get_logger().

    Returns:
        The ``rahn`` root logger
    """
    global _logger
    _logger = RahnLogger(
        log_dir=log_dir,
        level=level,
        max_file_size_mb=max_file_size_mb,
        backup_count=backup_count,
        console=console,
    )
    return _logger.get_logger()


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a toolkit logger.

    Args:
        name: Optional child name (e.g. "trainer" -> "rahn.trainer")

    Returns:
        Logger instance
    """
    global _logger
    if _logger is None:
        _logger = RahnLogger()
    if not name:
        return _logger.get_logger()
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def reset_loggers() -> None:
    """Reset global logger instance (mainly for testing)."""
    global _logger
    if _logger is not None:
        for handler in list(_logger.logger.handlers):
            handler.close()
        _logger.logger.handlers.clear()
    _logger = None
