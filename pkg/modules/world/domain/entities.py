"""Domain entities for the world module.

Agents carry a stable id for as long as they stay in the world; world
states, label frames and camera frames are immutable snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from modules.world.domain.exceptions import InvalidWorldStateError, LabelShapeError


@dataclass(frozen=True)
class Agent:
    """A vehicle moving on the ground plane.

    Attributes:
        id: Track id, unique within an episode and never reused.
        position: (x, y) in meters, vehicle frame.
        heading: Yaw in radians, 0 along vehicle +x.
        speed: Meters per step.
        size: Footprint (length, width) in meters.
        turn_rate: Heading change per step while a turn is active.
        turn_steps_left: Remaining steps of the active turn.
    """

    id: int
    position: tuple[float, float]
    heading: float
    speed: float
    size: tuple[float, float]
    turn_rate: float = 0.0
    turn_steps_left: int = 0


@dataclass(frozen=True)
class WorldState:
    """Snapshot of the world at one step.

    Attributes:
        agents: Agents present at this step.
        step_index: Step counter, 0 at initialization.
        next_id: Id handed to the next spawned agent.
    """

    agents: tuple[Agent, ...]
    step_index: int = 0
    next_id: int = 1

    def __post_init__(self) -> None:
        """Validate id uniqueness and finite positions."""
        ids = [agent.id for agent in self.agents]
        if len(set(ids)) != len(ids):
            raise InvalidWorldStateError(f"duplicate agent ids: {sorted(ids)}")
        if any(i <= 0 for i in ids):
            raise InvalidWorldStateError("agent ids must be positive")
        for agent in self.agents:
            if not all(math.isfinite(v) for v in agent.position):
                raise InvalidWorldStateError(f"agent {agent.id} has non-finite position")
        if ids and self.next_id <= max(ids):
            raise InvalidWorldStateError("next_id must exceed every live agent id")

    def agent(self, agent_id: int) -> Agent | None:
        """Return the agent with ``agent_id`` if it is present."""
        for agent in self.agents:
            if agent.id == agent_id:
                return agent
        return None


@dataclass(frozen=True, eq=False)
class LabelFrame:
    """Ground-truth BEV labels for a single step.

    Attributes:
        instance_map: [H, W] int32, 0 background, >0 track id.
        segmentation: [H, W] float32 in {0, 1}.
        center_heatmap: [H, W] float32 in [0, 1].
        offsets: [2, H, W] float32, cell vector to the instance centroid.
        flows: [2, H, W] float32, instance displacement to the next step.
    """

    instance_map: np.ndarray
    segmentation: np.ndarray
    center_heatmap: np.ndarray
    offsets: np.ndarray
    flows: np.ndarray


@dataclass(frozen=True, eq=False)
class EpisodeLabels:
    """Time-stacked ground truth of an episode.

    Attributes:
        instance_maps: [T, H, W] int32.
        segmentation: [T, H, W] float32.
        center_heatmaps: [T, H, W] float32.
        offsets: [T, 2, H, W] float32.
        flows: [T, 2, H, W] float32, zero at the last step.
    """

    instance_maps: np.ndarray
    segmentation: np.ndarray
    center_heatmaps: np.ndarray
    offsets: np.ndarray
    flows: np.ndarray

    def __post_init__(self) -> None:
        """Validate that all arrays share one [T, H, W] layout."""
        t, h, w = self.instance_maps.shape
        expected = {
            "segmentation": (t, h, w),
            "center_heatmaps": (t, h, w),
            "offsets": (t, 2, h, w),
            "flows": (t, 2, h, w),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise LabelShapeError(f"{name} has shape {actual}, expected {shape}")

    @classmethod
    def stack(cls, frames: list[LabelFrame]) -> EpisodeLabels:
        """Stack per-step label frames along a new time axis."""
        return cls(
            instance_maps=np.stack([f.instance_map for f in frames]).astype(np.int32),
            segmentation=np.stack([f.segmentation for f in frames]).astype(np.float32),
            center_heatmaps=np.stack([f.center_heatmap for f in frames]).astype(
                np.float32
            ),
            offsets=np.stack([f.offsets for f in frames]).astype(np.float32),
            flows=np.stack([f.flows for f in frames]).astype(np.float32),
        )

    @property
    def length(self) -> int:
        return int(self.instance_maps.shape[0])

    def frame(self, t: int) -> LabelFrame:
        """Return the labels of step ``t``."""
        return LabelFrame(
            instance_map=self.instance_maps[t],
            segmentation=self.segmentation[t],
            center_heatmap=self.center_heatmaps[t],
            offsets=self.offsets[t],
            flows=self.flows[t],
        )

    def window(self, start: int, stop: int) -> EpisodeLabels:
        """Return the labels of steps ``start`` to ``stop - 1``."""
        return EpisodeLabels(
            instance_maps=self.instance_maps[start:stop],
            segmentation=self.segmentation[start:stop],
            center_heatmaps=self.center_heatmaps[start:stop],
            offsets=self.offsets[start:stop],
            flows=self.flows[start:stop],
        )


@dataclass(frozen=True, eq=False)
class MultiCamFrame:
    """Images of every rig camera at one step.

    Attributes:
        images: [n_cam, 3, h, w] float32 in [0, 1].
    """

    images: np.ndarray

    @property
    def n_cameras(self) -> int:
        return int(self.images.shape[0])


@dataclass(frozen=True, eq=False)
class Episode:
    """A rendered and labelled episode.

    Attributes:
        images: [T, n_cam, 3, h, w] float32 in [0, 1].
        labels: Aligned ground truth.
        seed: Seed the episode was generated from.
    """

    images: np.ndarray
    labels: EpisodeLabels
    seed: int

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.labels.length:
            raise LabelShapeError(
                f"{self.images.shape[0]} frames but {self.labels.length} label steps"
            )

    @property
    def length(self) -> int:
        return self.labels.length

    def frame(self, t: int) -> MultiCamFrame:
        return MultiCamFrame(images=self.images[t])
