"""Structured logging configuration using structlog.

This module provides:
- Structlog configuration for JSON and console output
- Run-context binding so every line of a run carries its run id
- Utility functions for logging with context
"""

from __future__ import annotations

import logging
import sys
from typing import Any

import structlog
from structlog.types import EventDict, Processor


def round_floats(
    logger: logging.Logger, method_name: str, event_dict: EventDict
) -> EventDict:
    """Shorten float values so loss logs stay readable.

    Args:
        logger: The wrapped logger.
        method_name: The logging method name.
        event_dict: The current event dictionary.

    Returns:
        Event dictionary with floats rounded to 6 significant digits.
    """
    for key, value in event_dict.items():
        if isinstance(value, float):
            event_dict[key] = float(f"{value:.6g}")
    return event_dict


def configure_structlog(json_format: bool = False, level: str = "INFO") -> None:
    """Configure structlog for the application.

    Args:
        json_format: If True, output JSON format; otherwise, use console format.
        level: Root log level name.
    """
    shared_processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.UnicodeDecoder(),
        round_floats,
    ]

    if json_format:
        renderer: Processor = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(
            colors=sys.stderr.isatty(),
        )

    structlog.configure(
        processors=shared_processors
        + [
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    formatter = structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=shared_processors,
        processors=[
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            renderer,
        ],
    )

    # Logs go to stderr; stdout is reserved for command output.
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.handlers = [handler]
    root_logger.setLevel(level)


def bind_run_context(**context: Any) -> None:
    """Bind key-value pairs to every subsequent log line of this context.

    Args:
        **context: Values such as ``run_id`` or ``stage``.

    Example:
        bind_run_context(run_id="a1b2", stage="pretrain")
    """
    structlog.contextvars.bind_contextvars(**context)


def clear_run_context() -> None:
    """Remove all bound run context."""
    structlog.contextvars.clear_contextvars()


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    """Get a structlog logger instance.

    Args:
        name: Optional logger name. Defaults to caller's module name.

    Returns:
        Configured structlog logger.

    Example:
        logger = get_logger(__name__)
        logger.info("episode_generated", episode_seed=7)
    """
    return structlog.get_logger(name)
