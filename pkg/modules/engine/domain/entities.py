"""Batches of episodes as tensors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import torch

from modules.heads.domain.value_objects import ModalityTargets

if TYPE_CHECKING:
    from modules.world.domain.entities import Episode


@dataclass(frozen=True, eq=False)
class EpisodeBatch:
    """A batch of aligned episodes.

    Attributes:
        indices: Episode indices in the dataset.
        images: [B, T, N, 3, h, w] images in [0, 1].
        targets: Label tensors shaped [B, T, ...].
        instance_maps: [B, T, H, W] ground-truth track ids.
    """

    indices: tuple[int, ...]
    images: torch.Tensor
    targets: ModalityTargets
    instance_maps: np.ndarray

    @classmethod
    def from_episodes(
        cls,
        indices: list[int],
        episodes: list[Episode],
        dtype: torch.dtype = torch.float32,
    ) -> EpisodeBatch:
        """Stack episodes of equal length into one batch."""
        labels = [e.labels for e in episodes]
        return cls(
            indices=tuple(indices),
            images=torch.as_tensor(np.stack([e.images for e in episodes]), dtype=dtype),
            targets=ModalityTargets.from_arrays(
                np.stack([lab.segmentation for lab in labels]),
                np.stack([lab.center_heatmaps for lab in labels]),
                np.stack([lab.offsets for lab in labels]),
                np.stack([lab.flows for lab in labels]),
                dtype=dtype,
            ),
            instance_maps=np.stack([lab.instance_maps for lab in labels]),
        )

    @property
    def size(self) -> int:
        return int(self.images.shape[0])

    @property
    def steps(self) -> int:
        return int(self.images.shape[1])

    def window(self, steps: int) -> EpisodeBatch:
        """The first ``steps`` time steps of every episode."""
        return EpisodeBatch(
            indices=self.indices,
            images=self.images[:, :steps],
            targets=self.targets.map(lambda x: x[:, :steps]),
            instance_maps=self.instance_maps[:, :steps],
        )

    def to(self, device: torch.device | str) -> EpisodeBatch:
        """Move the tensors of the batch to ``device``."""
        return EpisodeBatch(
            indices=self.indices,
            images=self.images.to(device),
            targets=self.targets.map(lambda x: x.to(device)),
            instance_maps=self.instance_maps,
        )
