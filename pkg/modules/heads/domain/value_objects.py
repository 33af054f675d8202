"""Value objects for the heads module."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, fields

import numpy as np
import torch

from shared.exceptions import ConfigurationError

# seg, center, offset (2), flow (2)
LABEL_CHANNELS = 6


@dataclass(frozen=True, eq=False)
class OutputModalities:
    """Decoded output modalities, batched over leading dimensions.

    Attributes:
        seg_logits: [..., 2, H, W] background/vehicle logits.
        center: [..., 1, H, W] center heatmap in [0, 1].
        offset: [..., 2, H, W] vector to the instance centroid, cells.
        flow: [..., 2, H, W] displacement to the next step, cells.
    """

    seg_logits: torch.Tensor
    center: torch.Tensor
    offset: torch.Tensor
    flow: torch.Tensor

    @property
    def segmentation(self) -> torch.Tensor:
        """Binary vehicle mask [..., H, W]."""
        return self.seg_logits.argmax(dim=-3)

    def map(self, fn: Callable[[torch.Tensor], torch.Tensor]) -> OutputModalities:
        """Apply ``fn`` to every tensor."""
        return OutputModalities(*(fn(getattr(self, f.name)) for f in fields(self)))


@dataclass(frozen=True, eq=False)
class ModalityTargets:
    """Ground-truth modalities as tensors, batched like ``OutputModalities``.

    Attributes:
        segmentation: [..., H, W] in {0, 1}.
        center: [..., 1, H, W].
        offset: [..., 2, H, W].
        flow: [..., 2, H, W].
    """

    segmentation: torch.Tensor
    center: torch.Tensor
    offset: torch.Tensor
    flow: torch.Tensor

    @classmethod
    def from_arrays(
        cls,
        segmentation: np.ndarray,
        center_heatmaps: np.ndarray,
        offsets: np.ndarray,
        flows: np.ndarray,
        dtype: torch.dtype = torch.float32,
    ) -> ModalityTargets:
        """Build targets from label arrays shaped [..., H, W] / [..., 2, H, W]."""
        return cls(
            segmentation=torch.as_tensor(segmentation, dtype=dtype),
            center=torch.as_tensor(center_heatmaps, dtype=dtype).unsqueeze(-3),
            offset=torch.as_tensor(offsets, dtype=dtype),
            flow=torch.as_tensor(flows, dtype=dtype),
        )

    def as_channels(self) -> torch.Tensor:
        """Concatenate into [..., 6, H, W] (seg, center, offset, flow)."""
        return torch.cat(
            [self.segmentation.unsqueeze(-3), self.center, self.offset, self.flow], dim=-3
        )

    def map(self, fn: Callable[[torch.Tensor], torch.Tensor]) -> ModalityTargets:
        return ModalityTargets(*(fn(getattr(self, f.name)) for f in fields(self)))


@dataclass(frozen=True)
class LossWeights:
    """Weights of the loss terms in the training objective."""

    seg: float = 1.0
    center: float = 10.0
    offset: float = 1.0
    flow: float = 1.0
    kl: float = 1.0
    state_nll: float = 1.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigurationError(f"loss weight {f.name} must be >= 0", field=f.name)


@dataclass(frozen=True, eq=False)
class ModalityLosses:
    """Scalar supervised losses."""

    seg: torch.Tensor
    center: torch.Tensor
    offset: torch.Tensor
    flow: torch.Tensor

    def weighted_sum(self, weights: LossWeights) -> torch.Tensor:
        return (
            weights.seg * self.seg
            + weights.center * self.center
            + weights.offset * self.offset
            + weights.flow * self.flow
        )

    def as_floats(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def zeros(cls, like: torch.Tensor) -> ModalityLosses:
        zero = like.new_zeros(())
        return cls(zero, zero, zero, zero)
