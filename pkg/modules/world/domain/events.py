"""Domain events for the world module."""

from __future__ import annotations

from typing import ClassVar

from contracts.events.base import BaseEvent


class EpisodeGenerated(BaseEvent):
    """Event raised when an episode has been written."""

    _event_type: ClassVar[str] = "world.episode.generated"

    index: int
    episode_seed: int
    foreground_cells: int


class DatasetGenerated(BaseEvent):
    """Event raised when a dataset is complete."""

    _event_type: ClassVar[str] = "world.dataset.generated"

    episodes: int
    seed: int
