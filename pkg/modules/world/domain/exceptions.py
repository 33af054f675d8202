"""Domain exceptions for the world module."""

from __future__ import annotations

from shared.exceptions import DomainError


class WorldDomainError(DomainError):
    """Base exception for all world domain errors."""

    def __init__(self, message: str, code: str = "WORLD_ERROR") -> None:
        super().__init__(message, code=code)


class WorldTooCrowdedError(WorldDomainError):
    """Raised when agents cannot be placed without overlap."""

    def __init__(self, placed: int, requested: int, retries: int) -> None:
        self.placed = placed
        self.requested = requested
        self.retries = retries
        super().__init__(
            f"world too crowded: placed {placed} of {requested} agents "
            f"before exhausting {retries} retries",
            code="WORLD_TOO_CROWDED",
        )


class InvalidWorldStateError(WorldDomainError):
    """Raised when a world state violates its invariants."""

    def __init__(self, message: str) -> None:
        super().__init__(message, code="INVALID_WORLD_STATE")


class LabelShapeError(WorldDomainError):
    """Raised when label arrays do not share one [T, H, W] layout."""

    def __init__(self, message: str) -> None:
        super().__init__(message, code="LABEL_SHAPE")
