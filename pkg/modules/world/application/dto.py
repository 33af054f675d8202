"""Data Transfer Objects for the world module."""

from __future__ import annotations

from dataclasses import dataclass

from modules.world.domain.value_objects import RigConfig, WorldConfig


@dataclass(frozen=True)
class GenerateDatasetCommand:
    """Command to generate a dataset of episodes.

    ``world.seed`` is ignored; each episode seed is derived from ``seed``
    and the episode index.
    """

    world: WorldConfig
    rig: RigConfig
    episodes: int
    seed: int
    config_hash: str
    workers: int = 1


@dataclass(frozen=True)
class DatasetDTO:
    """Summary of a generated dataset."""

    episodes: int
    episode_seeds: tuple[int, ...]
    grid_cells: int
