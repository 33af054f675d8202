"""Exception hierarchy for the lab.

This module provides:
- Base exception classes for domain and application errors
- The mapping from error classes to CLI exit codes
- Error payload formatting for the command-line surface
"""

from __future__ import annotations

from typing import Any

# =============================================================================
# Exit Codes
# =============================================================================

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


# =============================================================================
# Base Exceptions
# =============================================================================


class LabError(Exception):
    """Base class for every error raised by the lab.

    Attributes:
        message: Human-readable error message.
        code: Machine-readable error code.
        exit_code: Process exit status when the error reaches the CLI.
    """

    exit_code: int = EXIT_FAILURE

    def __init__(self, message: str, code: str = "LAB_ERROR") -> None:
        """Initialize lab error.

        Args:
            message: Human-readable error message.
            code: Machine-readable error code.
        """
        self.message = message
        self.code = code
        super().__init__(message)


class DomainError(LabError):
    """Base class for domain layer errors.

    Domain errors represent violated invariants or invalid states within
    a simulation, model or metric computation.
    """

    def __init__(self, message: str, code: str = "DOMAIN_ERROR") -> None:
        super().__init__(message, code=code)


class ConfigurationError(LabError, ValueError):
    """A configuration value, shape or file is invalid.

    Also a ``ValueError`` so pydantic reports it as a validation failure
    when raised from a dataclass ``__post_init__``.
    """

    exit_code = EXIT_CONFIG_ERROR

    def __init__(
        self,
        message: str,
        field: str | None = None,
        details: list[dict[str, Any]] | None = None,
    ) -> None:
        """Initialize configuration error.

        Args:
            message: Human-readable error message.
            field: Offending field (if applicable).
            details: List of field-level error details.
        """
        self.field = field
        self.details = details or []
        super().__init__(message, code="CONFIG_ERROR")


class NumericalInstabilityError(LabError):
    """A loss or tensor became non-finite."""

    exit_code = EXIT_NUMERIC_FAILURE

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        """Initialize numeric failure.

        Args:
            message: Human-readable error message.
            diagnostics: Loss components and step context at failure time.
        """
        self.diagnostics = diagnostics or {}
        super().__init__(message, code="NUMERIC_FAILURE")


# =============================================================================
# Application Exceptions
# =============================================================================


class ApplicationError(LabError):
    """Base class for application layer errors.

    Application errors represent failures in use case execution such as
    missing inputs on disk.
    """

    def __init__(self, message: str, code: str = "APPLICATION_ERROR") -> None:
        super().__init__(message, code=code)


class DataNotFoundError(ApplicationError):
    """A requested episode, checkpoint or report does not exist."""

    def __init__(self, kind: str, location: str) -> None:
        """Initialize not-found error.

        Args:
            kind: Kind of artifact that was not found.
            location: Path or identifier that was looked up.
        """
        self.kind = kind
        self.location = location
        super().__init__(f"{kind} not found: {location}", code="NOT_FOUND")


class EmptyReportError(ApplicationError):
    """A report holds no rows to work with."""

    def __init__(self, location: str) -> None:
        self.location = location
        super().__init__(f"Report is empty: {location}", code="EMPTY_REPORT")


# =============================================================================
# Error Formatting
# =============================================================================


def format_error_response(
    code: str,
    message: str,
    details: list[dict[str, Any]] | None = None,
    run_id: str | None = None,
) -> dict[str, Any]:
    """Format an error in the standard payload shape.

    Args:
        code: Machine-readable error code.
        message: Human-readable error message.
        details: List of field-level error details.
        run_id: Run identifier for correlating with the log stream.

    Returns:
        Standardized error dictionary.
    """
    error: dict[str, Any] = {
        "code": code,
        "message": message,
    }
    if details:
        error["details"] = details
    if run_id:
        error["run_id"] = run_id

    return {"error": error}


def exit_code_for(exc: BaseException) -> int:
    """Return the process exit status for an exception.

    Args:
        exc: The exception that reached the command-line surface.

    Returns:
        Exit code; unknown exceptions map to the generic failure code.
    """
    if isinstance(exc, LabError):
        return exc.exit_code
    return EXIT_FAILURE
