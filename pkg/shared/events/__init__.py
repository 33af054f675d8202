"""Event publishing for domain events."""

from shared.events.publisher import (
    EventPublisher,
    RecordingEventPublisher,
    StructlogEventPublisher,
)

__all__ = [
    "EventPublisher",
    "RecordingEventPublisher",
    "StructlogEventPublisher",
]
