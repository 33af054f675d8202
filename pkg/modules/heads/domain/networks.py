"""Modality decoder and the label encoder of the modality-conditioned posterior."""

from __future__ import annotations

import torch
from torch import nn

from modules.heads.domain.value_objects import LABEL_CHANNELS, OutputModalities
from shared.layers import conv_block


def _branch(hidden: int, out_channels: int) -> nn.Sequential:
    return nn.Sequential(conv_block(hidden, hidden), nn.Conv2d(hidden, out_channels, 1))


class ModalityDecoder(nn.Module):
    """Shared trunk with segmentation, center, offset and flow branches."""

    def __init__(self, in_channels: int, hidden: int = 32) -> None:
        super().__init__()
        self.trunk = nn.Sequential(conv_block(in_channels, hidden), conv_block(hidden, hidden))
        self.seg = _branch(hidden, 2)
        self.center = _branch(hidden, 1)
        self.offset = _branch(hidden, 2)
        self.flow = _branch(hidden, 2)

    def forward(self, states: torch.Tensor) -> OutputModalities:
        """Decode [..., C, H, W] states frame by frame."""
        lead = states.shape[:-3]
        features = self.trunk(states.reshape(-1, *states.shape[-3:]))

        def unflatten(x: torch.Tensor) -> torch.Tensor:
            return x.reshape(*lead, *x.shape[1:])

        return OutputModalities(
            seg_logits=unflatten(self.seg(features)),
            center=unflatten(torch.sigmoid(self.center(features))),
            offset=unflatten(self.offset(features)),
            flow=unflatten(self.flow(features)),
        )


class ModalityEncoder(nn.Module):
    """Strided encoder from label maps [..., 6, H, W] to [..., c_e, H/4, W/4]."""

    def __init__(self, out_channels: int, hidden: int = 32) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            conv_block(LABEL_CHANNELS, hidden, stride=2),
            conv_block(hidden, hidden, stride=2),
            nn.Conv2d(hidden, out_channels, 3, padding=1),
            nn.Tanh(),
        )

    def forward(self, labels: torch.Tensor) -> torch.Tensor:
        lead = labels.shape[:-3]
        encoded = self.layers(labels.reshape(-1, *labels.shape[-3:]))
        return encoded.reshape(*lead, *encoded.shape[1:])
