"""Base event class for all domain events.

All events in the lab inherit from BaseEvent and include
standard metadata fields for tracing runs through the log stream.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, ClassVar
from uuid import UUID, uuid4

from pydantic import BaseModel, ConfigDict, Field


def _utc_now() -> datetime:
    """Return current UTC datetime."""
    return datetime.now(timezone.utc)


class BaseEvent(BaseModel):
    """Base class for all domain events.

    Attributes:
        event_id: Unique identifier for this event instance.
        event_type: Fully qualified event type (e.g., "engine.epoch.completed").
        event_version: Schema version for backward compatibility.
        occurred_at: Timestamp when the event occurred.
        run_id: Identifier of the run that emitted the event.
    """

    model_config = ConfigDict(frozen=True)

    _event_type: ClassVar[str] = ""

    event_id: UUID = Field(default_factory=uuid4)
    event_type: str = Field(default="")
    event_version: str = Field(default="1.0")
    occurred_at: datetime = Field(default_factory=_utc_now)
    run_id: str

    def model_post_init(self, __context: object) -> None:
        """Set event_type from class attribute if not provided."""
        if not self.event_type and self._event_type:
            object.__setattr__(self, "event_type", self._event_type)

    def payload(self) -> dict[str, Any]:
        """Return the event-specific fields without the metadata envelope."""
        metadata = {"event_id", "event_type", "event_version", "occurred_at", "run_id"}
        return {
            key: value
            for key, value in self.model_dump(mode="json").items()
            if key not in metadata
        }
