"""Sub-networks of the state-space model.

- ``DownsamplingEncoder``: BEV state to encoded state at 1/4 resolution.
- ``UpsamplingDecoder``: latent state back to a full-resolution BEV state.
- ``GaussianNet``: conv trunk with squeeze-excitation emitting mean and
  log-variance; used for the first latent and for the prior over z.
- ``PosteriorNet``: two stacked spatial GRUs, two conv blocks, Gaussian head.
- ``ResidualNet``: the residual update ``f(y, z)``.
"""

from __future__ import annotations

import torch
from torch import nn

from modules.dynamics.domain.value_objects import GaussianParams
from shared.layers import SqueezeExcitation, conv_block


class DownsamplingEncoder(nn.Module):
    """Four conv blocks with two max-pools and a tanh-bounded output."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        hidden: int = 32,
        dropout: float = 0.25,
    ) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            conv_block(in_channels, hidden),
            conv_block(hidden, hidden),
            nn.Dropout(dropout),
            nn.MaxPool2d(2),
            conv_block(hidden, hidden),
            conv_block(hidden, hidden),
            nn.MaxPool2d(2),
            nn.Conv2d(hidden, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.Tanh(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class UpsamplingDecoder(nn.Module):
    """Mirror of the encoder with nearest-neighbour up-sampling."""

    def __init__(self, in_channels: int, out_channels: int, hidden: int = 32) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            conv_block(in_channels, hidden),
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(hidden, hidden),
            conv_block(hidden, hidden),
            nn.Upsample(scale_factor=2, mode="nearest"),
            conv_block(hidden, hidden),
            nn.Conv2d(hidden, out_channels, 3, padding=1),
        )

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        return self.layers(y)


class ConvTrunk(nn.Module):
    """Four conv blocks, squeeze-excitation after the second and the fourth."""

    def __init__(self, in_channels: int, hidden: int) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            conv_block(in_channels, hidden),
            conv_block(hidden, hidden),
            SqueezeExcitation(hidden),
            conv_block(hidden, hidden),
            conv_block(hidden, hidden),
            SqueezeExcitation(hidden),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class GaussianNet(nn.Module):
    """Conv trunk followed by a head emitting mean and log-variance."""

    def __init__(self, in_channels: int, out_channels: int, hidden: int = 32) -> None:
        super().__init__()
        self.trunk = ConvTrunk(in_channels, hidden)
        self.head = nn.Conv2d(hidden, 2 * out_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> GaussianParams:
        mean, log_var = self.head(self.trunk(x)).chunk(2, dim=1)
        return GaussianParams(mean, log_var)


class ConvGRUCell(nn.Module):
    """Convolutional GRU cell keeping the spatial layout of its input."""

    def __init__(self, input_channels: int, hidden_channels: int, kernel_size: int = 3) -> None:
        super().__init__()
        self.hidden_channels = hidden_channels
        padding = kernel_size // 2
        self.gates = nn.Conv2d(
            input_channels + hidden_channels, 2 * hidden_channels, kernel_size, padding=padding
        )
        self.candidate = nn.Conv2d(
            input_channels + hidden_channels, hidden_channels, kernel_size, padding=padding
        )

    def forward(self, x: torch.Tensor, state: torch.Tensor | None) -> torch.Tensor:
        if state is None:
            state = x.new_zeros(x.shape[0], self.hidden_channels, *x.shape[2:])
        update, reset = torch.sigmoid(self.gates(torch.cat([x, state], dim=1))).chunk(2, dim=1)
        candidate = torch.tanh(self.candidate(torch.cat([x, reset * state], dim=1)))
        return (1.0 - update) * state + update * candidate


class PosteriorNet(nn.Module):
    """Causal recurrent posterior over the per-cell stochastic latent."""

    def __init__(self, in_channels: int, out_channels: int, hidden: int = 32) -> None:
        super().__init__()
        self.cells = nn.ModuleList(
            [ConvGRUCell(in_channels, hidden), ConvGRUCell(hidden, hidden)]
        )
        self.blocks = nn.Sequential(
            conv_block(hidden, hidden, kernel_size=1),
            conv_block(hidden, hidden, kernel_size=3),
        )
        self.head = nn.Conv2d(hidden, 2 * out_channels, 3, padding=1)

    def forward(self, inputs: torch.Tensor) -> GaussianParams:
        """Map [B, T, C, h, w] inputs to per-step parameters [B, T, c_z, h, w]."""
        states: list[torch.Tensor | None] = [None] * len(self.cells)
        hidden = []
        for t in range(inputs.shape[1]):
            x = inputs[:, t]
            for i, cell in enumerate(self.cells):
                states[i] = cell(x, states[i])
                x = states[i]
            hidden.append(x)
        stacked = torch.stack(hidden, dim=1)
        batch, steps = stacked.shape[:2]
        out = self.head(self.blocks(stacked.flatten(0, 1)))
        out = out.reshape(batch, steps, *out.shape[1:])
        mean, log_var = out.chunk(2, dim=2)
        return GaussianParams(mean, log_var)


class ResidualNet(nn.Module):
    """``f(y, z)``: the increment of the latent state for one step."""

    def __init__(
        self,
        latent_channels: int,
        stochastic_channels: int,
        hidden: int = 32,
        zero_init: bool = False,
    ) -> None:
        super().__init__()
        self.trunk = ConvTrunk(latent_channels + stochastic_channels, hidden)
        self.head = nn.Conv2d(hidden, latent_channels, 3, padding=1)
        if zero_init:
            nn.init.zeros_(self.head.weight)
            nn.init.zeros_(self.head.bias)

    def forward(self, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        return self.head(self.trunk(torch.cat([y, z], dim=1)))
