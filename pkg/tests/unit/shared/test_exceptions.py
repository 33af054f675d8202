"""Unit tests for the exception hierarchy and error payloads."""

import pytest

from shared.exceptions import (
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    EXIT_NUMERIC_FAILURE,
    ConfigurationError,
    DataNotFoundError,
    DomainError,
    EmptyReportError,
    LabError,
    NumericalInstabilityError,
    exit_code_for,
    format_error_response,
)


class TestExitCodes:
    """Tests for exit_code_for."""

    @pytest.mark.parametrize(
        ("exc", "expected"),
        [
            (ConfigurationError("bad"), EXIT_CONFIG_ERROR),
            (NumericalInstabilityError("nan"), EXIT_NUMERIC_FAILURE),
            (DataNotFoundError("episode", "x"), EXIT_FAILURE),
            (EmptyReportError("r"), EXIT_FAILURE),
            (DomainError("d"), EXIT_FAILURE),
            (RuntimeError("other"), EXIT_FAILURE),
        ],
    )
    def test_mapping(self, exc, expected):
        """Test the exit status of each error class."""
        assert exit_code_for(exc) == expected


class TestErrors:
    """Tests for error attributes."""

    def test_configuration_error_is_value_error(self):
        """Test that configuration errors are also ValueErrors."""
        exc = ConfigurationError("bad", field="lr")
        assert isinstance(exc, ValueError)
        assert isinstance(exc, LabError)
        assert exc.field == "lr"
        assert exc.details == []

    def test_not_found_message(self):
        """Test the not-found message names kind and location."""
        exc = DataNotFoundError("checkpoint", "/tmp/model.pt")
        assert exc.message == "checkpoint not found: /tmp/model.pt"
        assert exc.code == "NOT_FOUND"

    def test_numeric_diagnostics(self):
        """Test that diagnostics default to an empty mapping."""
        assert NumericalInstabilityError("nan").diagnostics == {}
        assert NumericalInstabilityError("nan", {"kl": 1.0}).diagnostics == {"kl": 1.0}


class TestFormatErrorResponse:
    """Tests for format_error_response."""

    def test_minimal(self):
        """Test a payload without details or run id."""
        assert format_error_response("X", "msg") == {"error": {"code": "X", "message": "msg"}}

    def test_full(self):
        """Test a payload with details and run id."""
        details = [{"field": "lr", "message": "must be > 0"}]
        payload = format_error_response("CONFIG_ERROR", "bad", details, "abc")
        assert payload["error"]["details"] == details
        assert payload["error"]["run_id"] == "abc"
