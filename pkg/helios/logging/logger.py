# helios - Structured logging module
# MIT License

"""Structured Logging for helios

Every helios module logs through a named logger obtained from `get_logger`.
Structured payloads are passed via ``extra`` and rendered by the JSON formatter
under the ``data`` key, which keeps experiment logs machine-readable:

Example:
    >>> from helios.logging import get_logger, configure_logger, LogLevel, LogFormat
    >>> configure_logger(level=LogLevel.INFO, format=LogFormat.JSON,
    ...                  log_file="runs/helios.log")
    >>> logger = get_logger("helios.training.loop")
    >>> logger.info("Epoch finished", extra={"epoch": 3, "val_acc": 0.81})
"""

import os
import sys
import json
import logging
import datetime
import traceback
from enum import Enum
from typing import Dict, Any, Optional, List
from logging.handlers import RotatingFileHandler

from helios.exceptions import ConfigurationError

# Registry of loggers handed out by get_logger
_LOGGERS: Dict[str, logging.Logger] = {}
# Last configuration applied by configure_logger
_GLOBAL_CONFIG: Dict[str, Any] = {}


class LogLevel(Enum):
    """Standard log levels."""
    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR
    CRITICAL = logging.CRITICAL


class LogFormat(Enum):
    """Available log format styles."""
    TEXT = "text"  # Human-readable text format
    JSON = "json"  # One JSON object per line
    COMPACT = "compact"  # Minimal single-letter level prefix


class LogHandler(Enum):
    """Available log handlers."""
    CONSOLE = "console"
    FILE = "file"
    ROTATING_FILE = "rotating_file"


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays show up in training payloads
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


class JsonFormatter(logging.Formatter):
    """JSON log formatter for structured, machine-readable logs."""

    def __init__(self, include_timestamp: bool = True):
        super().__init__()
        self.include_timestamp = include_timestamp

    def format(self, record):
        log_data = {
            "level": record.levelname,
            "name": record.name,
            "message": record.getMessage(),
        }

        if self.include_timestamp:
            log_data["timestamp"] = datetime.datetime.fromtimestamp(
                record.created
            ).isoformat()

        if record.exc_info:
            log_data["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "traceback": traceback.format_exception(*record.exc_info)
            }

        if getattr(record, "_extra", None):
            log_data["data"] = record._extra

        return json.dumps(log_data, sort_keys=True, default=_json_default)


class CompactFormatter(logging.Formatter):
    """Compact log formatter: one short line per record."""

    def __init__(self, include_timestamp: bool = True):
        super().__init__()
        self.include_timestamp = include_timestamp

    def format(self, record):
        prefix = f"{record.levelname[0]} "
        if self.include_timestamp:
            timestamp = datetime.datetime.fromtimestamp(record.created).strftime("%H:%M:%S")
            prefix = f"{timestamp} {prefix}"

        msg = f"{prefix}{record.name}: {record.getMessage()}"
        extra = getattr(record, "_extra", None)
        if extra:
            fields = " ".join(f"{k}={v}" for k, v in sorted(extra.items()))
            msg += f" [{fields}]"

        if record.exc_info:
            exception_msg = traceback.format_exception_only(record.exc_info[0], record.exc_info[1])[0].strip()
            msg += f" | {exception_msg}"

        return msg


class HeliosLogger(logging.Logger):
    """Logger that keeps ``extra`` payloads together for structured output."""

    def _log_with_extra(self, level, msg, args, exc_info=None, extra=None, stack_info=False, stacklevel=1):
        if not self.isEnabledFor(level):
            return
        if extra is not None and not isinstance(extra, dict):
            extra = {"data": extra}
        extra_record = {"_extra": extra} if extra else None
        super()._log(level, msg, args, exc_info, extra_record, stack_info, stacklevel + 1)

    def debug(self, msg, *args, **kwargs):
        self._log_with_extra(logging.DEBUG, msg, args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self._log_with_extra(logging.INFO, msg, args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self._log_with_extra(logging.WARNING, msg, args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self._log_with_extra(logging.ERROR, msg, args, **kwargs)

    def critical(self, msg, *args, **kwargs):
        self._log_with_extra(logging.CRITICAL, msg, args, **kwargs)

    def exception(self, msg, *args, exc_info=True, **kwargs):
        self._log_with_extra(logging.ERROR, msg, args, exc_info=exc_info, **kwargs)


def get_formatter(log_format: LogFormat, include_timestamp: bool = True) -> logging.Formatter:
    """Get the formatter for a format specification.

    Args:
        log_format: The desired log format
        include_timestamp: Whether to include timestamps in logs

    Returns:
        A configured formatter instance
    """
    if log_format == LogFormat.JSON:
        return JsonFormatter(include_timestamp=include_timestamp)
    if log_format == LogFormat.COMPACT:
        return CompactFormatter(include_timestamp=include_timestamp)
    if include_timestamp:
        return logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            "%Y-%m-%d %H:%M:%S"
        )
    return logging.Formatter("[%(levelname)s] %(name)s: %(message)s")


def create_handler(handler_type: LogHandler, log_file: Optional[str] = None,
                   max_bytes: int = 10 * 1024 * 1024, backup_count: int = 5) -> logging.Handler:
    """Create a log handler of the specified type.

    Raises:
        ConfigurationError: If a file handler is requested without ``log_file``
    """
    if handler_type == LogHandler.CONSOLE:
        # stderr keeps CLI stdout free for machine-readable output
        return logging.StreamHandler(sys.stderr)

    if not log_file:
        raise ConfigurationError(f"log_file is required for {handler_type.value} handler")
    os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
    if handler_type == LogHandler.FILE:
        return logging.FileHandler(log_file)
    if handler_type == LogHandler.ROTATING_FILE:
        return RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
    raise ConfigurationError(f"Unknown handler type: {handler_type}")


def configure_logger(
    level: LogLevel = LogLevel.INFO,
    format: LogFormat = LogFormat.TEXT,
    handlers: Optional[List[LogHandler]] = None,
    log_file: Optional[str] = None,
    rotation: bool = False,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 5,
    module_levels: Optional[Dict[str, LogLevel]] = None,
    include_timestamp: bool = True,
    propagate: bool = False,
) -> None:
    """Configure the ``helios`` logger hierarchy.

    Only the ``helios`` logger is touched, so applications embedding the library
    keep control of the root logger. Calling this again replaces the handlers.

    Args:
        level: Default level for helios loggers
        format: Format for every installed handler
        handlers: Handlers to install (console only by default). A FILE handler
            is added automatically when ``log_file`` is given.
        log_file: Path of the log file for file-based handlers
        rotation: Use a size-rotating handler instead of a plain file handler
        max_bytes: Rotation size
        backup_count: Number of rotated files to keep
        module_levels: Per-logger level overrides, e.g. ``{"helios.baselines": LogLevel.WARNING}``
        include_timestamp: Whether records carry wall-clock timestamps
        propagate: Let records reach the root logger as well (test capture)
    """
    if handlers is None:
        handlers = [LogHandler.CONSOLE]
    handlers = list(handlers)
    if log_file and not any(h in (LogHandler.FILE, LogHandler.ROTATING_FILE) for h in handlers):
        handlers.append(LogHandler.FILE)

    global _GLOBAL_CONFIG
    _GLOBAL_CONFIG = {
        "level": level,
        "format": format,
        "handlers": handlers,
        "log_file": log_file,
        "module_levels": dict(module_levels or {}),
    }

    base = get_logger("helios")
    base.setLevel(level.value)
    base.propagate = propagate
    for handler in base.handlers[:]:
        base.removeHandler(handler)
        handler.close()

    formatter = get_formatter(format, include_timestamp=include_timestamp)
    for handler_type in handlers:
        if handler_type == LogHandler.FILE and rotation:
            handler_type = LogHandler.ROTATING_FILE
        if handler_type != LogHandler.CONSOLE and not log_file:
            continue
        handler = create_handler(handler_type, log_file=log_file,
                                 max_bytes=max_bytes, backup_count=backup_count)
        handler.setFormatter(formatter)
        handler.setLevel(level.value)
        base.addHandler(handler)

    for module_name, module_level in (module_levels or {}).items():
        logging.getLogger(module_name).setLevel(module_level.value)


def get_logger(name: str) -> HeliosLogger:
    """Get the logger for a module name such as ``"helios.data.frame"``.

    Returns:
        A HeliosLogger, created on first use
    """
    if name in _LOGGERS:
        return _LOGGERS[name]

    # Install our class only for the duration of creation so foreign loggers
    # created elsewhere stay plain logging.Logger instances.
    previous = logging.getLoggerClass()
    logging.setLoggerClass(HeliosLogger)
    try:
        logger = logging.getLogger(name)
    finally:
        logging.setLoggerClass(previous)

    module_levels = _GLOBAL_CONFIG.get("module_levels", {})
    if name in module_levels:
        logger.setLevel(module_levels[name].value)

    _LOGGERS[name] = logger
    return logger
