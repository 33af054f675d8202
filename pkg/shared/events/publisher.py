"""Event publishers.

Use cases publish domain events through the ``EventPublisher`` port. The
default adapter writes each event to the structured log stream.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from shared.logging import get_logger

if TYPE_CHECKING:
    from contracts.events.base import BaseEvent

logger = get_logger(__name__)


class EventPublisher(ABC):
    """Interface for publishing domain events."""

    @abstractmethod
    def publish(self, event: BaseEvent) -> None:
        """Publish an event.

        Args:
            event: The event to publish.
        """
        ...

    def publish_batch(self, events: list[BaseEvent]) -> None:
        """Publish multiple events in order.

        Args:
            events: The events to publish.
        """
        for event in events:
            self.publish(event)


class StructlogEventPublisher(EventPublisher):
    """Publisher that logs every event as one structured line."""

    def publish(self, event: BaseEvent) -> None:
        logger.info(event.event_type, run_id=event.run_id, **event.payload())


class RecordingEventPublisher(EventPublisher):
    """Publisher that keeps events in memory, in publication order."""

    def __init__(self) -> None:
        self.events: list[BaseEvent] = []

    def publish(self, event: BaseEvent) -> None:
        self.events.append(event)

    def of_type(self, event_type: str) -> list[BaseEvent]:
        """Return recorded events whose ``event_type`` matches."""
        return [e for e in self.events if e.event_type == event_type]
