"""Repository interfaces for the world module.

These interfaces define the contract between the application layer
and the infrastructure layer, so use cases are testable without disk I/O.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from modules.world.domain.entities import Episode


class EpisodeRepository(ABC):
    """Repository interface for episode persistence."""

    @abstractmethod
    def save(self, index: int, episode: Episode, metadata: dict[str, Any]) -> None:
        """Persist an episode under ``index``.

        Args:
            index: Position of the episode in the dataset.
            episode: Rendered and labelled episode.
            metadata: JSON-serializable sidecar content.
        """
        ...

    @abstractmethod
    def load(self, index: int) -> Episode:
        """Load the episode stored under ``index``.

        Raises:
            DataNotFoundError: If no such episode exists.
        """
        ...

    @abstractmethod
    def metadata(self, index: int) -> dict[str, Any]:
        """Return the JSON sidecar of an episode."""
        ...

    @abstractmethod
    def indices(self) -> list[int]:
        """Return the stored episode indices in ascending order."""
        ...
