"""Value objects for the instances module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from shared.exceptions import ConfigurationError


class Center(NamedTuple):
    """An extracted instance center."""

    row: int
    col: int
    score: float


@dataclass(frozen=True)
class PostprocessConfig:
    """Thresholds of the instance post-processing.

    Attributes:
        center_threshold: Minimum heatmap score of a center.
        nms_radius: Suppression radius around a kept center, cells.
        min_track_iou: Minimum warped-overlap IoU to continue a track.
    """

    center_threshold: float = 0.25
    nms_radius: float = 3.0
    min_track_iou: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.center_threshold <= 1.0:
            raise ConfigurationError("center_threshold must be in [0, 1]", field="center_threshold")
        if self.nms_radius < 0:
            raise ConfigurationError("nms_radius must be >= 0", field="nms_radius")
        if not 0.0 <= self.min_track_iou <= 1.0:
            raise ConfigurationError("min_track_iou must be in [0, 1]", field="min_track_iou")


@dataclass(frozen=True, eq=False)
class GroupingResult:
    """A single-frame instance map and the foreground cells left unassigned."""

    instance_map: np.ndarray
    unassigned: int


@dataclass(frozen=True, eq=False)
class InstanceSequence:
    """Track-consistent instance maps [T, H, W]; 0 is background."""

    maps: np.ndarray

    def __post_init__(self) -> None:
        maps = np.asarray(self.maps)
        if maps.ndim != 3:
            raise ConfigurationError(f"instance maps must be [T, H, W], got {maps.shape}")
        if maps.size and maps.min() < 0:
            raise ConfigurationError("instance ids must be non-negative")
        object.__setattr__(self, "maps", maps.astype(np.int64, copy=False))

    @property
    def length(self) -> int:
        return int(self.maps.shape[0])

    def ids(self) -> set[int]:
        return {int(i) for i in np.unique(self.maps) if i > 0}

    def window(self, start: int, stop: int) -> InstanceSequence:
        return InstanceSequence(self.maps[start:stop])
