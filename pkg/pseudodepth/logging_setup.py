"""Structured logging configuration."""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import orjson

from pseudodepth.settings import settings

_RESERVED_ATTRS = frozenset(
    [
        "name",
        "msg",
        "args",
        "created",
        "filename",
        "funcName",
        "levelname",
        "levelno",
        "lineno",
        "module",
        "msecs",
        "message",
        "pathname",
        "process",
        "processName",
        "relativeCreated",
        "thread",
        "threadName",
        "exc_info",
        "exc_text",
        "stack_info",
        "taskName",
    ]
)


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    return value


class StructuredFormatter(logging.Formatter):
    """Format logs as JSON lines."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_obj: Dict[str, Any] = {
            "severity": record.levelname,
            "message": record.getMessage(),
            "timestamp": self.formatTime(record, self.datefmt),
            "logger": record.name,
        }

        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)

        # Extra fields passed through `extra=`
        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS:
                log_obj[key] = _to_jsonable(value)

        return orjson.dumps(
            log_obj, default=str, option=orjson.OPT_SERIALIZE_NUMPY
        ).decode("utf-8")


class ConsoleFormatter(logging.Formatter):
    """Human-readable single-line format with extras appended as key=value."""

    def format(self, record: logging.LogRecord) -> str:
        base = f"{self.formatTime(record, '%H:%M:%S')} {record.levelname:<7} {record.getMessage()}"
        extras = [
            f"{key}={_to_jsonable(value)}"
            for key, value in record.__dict__.items()
            if key not in _RESERVED_ATTRS
        ]
        if extras:
            base = f"{base} | {' '.join(extras)}"
        if record.exc_info:
            base = f"{base}\n{self.formatException(record.exc_info)}"
        return base


def setup_logging(level: Optional[str] = None, log_format: Optional[str] = None) -> None:
    """Configure logging for the process (idempotent)."""
    handler = logging.StreamHandler(sys.stderr)
    if (log_format or settings.log_format) == "text":
        handler.setFormatter(ConsoleFormatter())
    else:
        handler.setFormatter(StructuredFormatter())

    root_logger = logging.getLogger()
    for existing in list(root_logger.handlers):
        if getattr(existing, "_pseudodepth", False):
            root_logger.removeHandler(existing)
    handler._pseudodepth = True  # type: ignore[attr-defined]
    root_logger.setLevel((level or settings.log_level).upper())
    root_logger.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name."""
    return logging.getLogger(name)
