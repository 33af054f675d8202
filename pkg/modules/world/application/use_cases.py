"""Use cases for the world module.

Use cases orchestrate the domain services with the episode repository and
the event publisher.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from typing import TYPE_CHECKING

from modules.world.application.dto import DatasetDTO, GenerateDatasetCommand
from modules.world.domain.events import DatasetGenerated, EpisodeGenerated
from modules.world.domain.services import generate_episode
from modules.world.domain.value_objects import CameraRig, RigConfig, WorldConfig
from shared.logging import get_logger
from shared.seeding import derive_seed

if TYPE_CHECKING:
    from collections.abc import Iterable

    from modules.world.application.interfaces import EpisodeRepository
    from modules.world.domain.entities import Episode
    from shared.events import EventPublisher

logger = get_logger(__name__)


def episode_seed(dataset_seed: int, index: int) -> int:
    """Return the seed of episode ``index`` in a dataset."""
    return derive_seed(dataset_seed, index)


def _generate(world: WorldConfig, rig_config: RigConfig) -> Episode:
    # Module-level so worker processes can unpickle it.
    return generate_episode(world, CameraRig.from_config(rig_config))


class GenerateDataset:
    """Use case for generating and storing a dataset of episodes."""

    def __init__(
        self,
        episode_repository: EpisodeRepository,
        event_publisher: EventPublisher,
        run_id: str,
    ) -> None:
        self._episodes = episode_repository
        self._event_publisher = event_publisher
        self._run_id = run_id

    def execute(self, command: GenerateDatasetCommand) -> DatasetDTO:
        """Generate ``command.episodes`` episodes.

        Episode content depends only on the dataset seed and the episode
        index, never on the number of workers.

        Args:
            command: Generation command.

        Returns:
            Dataset summary.

        Raises:
            WorldTooCrowdedError: If any episode cannot be initialized.
        """
        worlds = [
            replace(command.world, seed=episode_seed(command.seed, index))
            for index in range(command.episodes)
        ]
        logger.info(
            "dataset_generation_started",
            episodes=command.episodes,
            seed=command.seed,
            workers=command.workers,
        )
        if command.workers > 1 and command.episodes > 1:
            with ProcessPoolExecutor(max_workers=command.workers) as pool:
                episodes = pool.map(_generate, worlds, [command.rig] * len(worlds))
                self._store_all(command, worlds, episodes)
        else:
            self._store_all(command, worlds, (_generate(w, command.rig) for w in worlds))

        self._event_publisher.publish(
            DatasetGenerated(run_id=self._run_id, episodes=command.episodes, seed=command.seed)
        )
        return DatasetDTO(
            episodes=command.episodes,
            episode_seeds=tuple(w.seed for w in worlds),
            grid_cells=command.world.grid_cells,
        )

    def _store_all(
        self,
        command: GenerateDatasetCommand,
        worlds: list[WorldConfig],
        episodes: Iterable[Episode],
    ) -> None:
        for index, (world, episode) in enumerate(zip(worlds, episodes, strict=True)):
            self._episodes.save(
                index,
                episode,
                {
                    "index": index,
                    "dataset_seed": command.seed,
                    "config_hash": command.config_hash,
                    "world": asdict(world),
                    "rig": asdict(command.rig),
                },
            )
            self._event_publisher.publish(
                EpisodeGenerated(
                    run_id=self._run_id,
                    index=index,
                    episode_seed=world.seed,
                    foreground_cells=int(episode.labels.segmentation.sum()),
                )
            )
