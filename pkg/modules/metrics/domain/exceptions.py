"""Domain exceptions for the metrics module."""

from __future__ import annotations

from shared.exceptions import DomainError


class MetricsDomainError(DomainError):
    """Base exception for all metrics domain errors."""

    def __init__(self, message: str, code: str = "METRICS_ERROR") -> None:
        super().__init__(message, code=code)


class HorizonUnavailableError(MetricsDomainError):
    """Raised when a sequence is too short for the requested horizon."""

    def __init__(self, horizon: int, available: int) -> None:
        self.horizon = horizon
        self.available = available
        super().__init__(
            f"horizon of {horizon} future steps requested, {available} available",
            code="HORIZON_UNAVAILABLE",
        )


class InsufficientSamplesError(MetricsDomainError):
    """Raised when a diversity metric gets fewer than two samples."""

    def __init__(self, n_samples: int) -> None:
        self.n_samples = n_samples
        super().__init__(
            f"generalized energy distance needs at least 2 samples, got {n_samples}",
            code="INSUFFICIENT_SAMPLES",
        )
