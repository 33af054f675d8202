"""Value objects for the dynamics module."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import torch

from shared.exceptions import ConfigurationError


class VariantFlag(str, Enum):
    """Whether the posterior over z also sees encoded output modalities."""

    STRETCHBEV = "stretchbev"
    STRETCHBEV_P = "stretchbev-p"

    @property
    def uses_modalities(self) -> bool:
        return self is VariantFlag.STRETCHBEV_P


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """Diagonal Gaussian given by mean and log-variance tensors of one shape."""

    mean: torch.Tensor
    log_var: torch.Tensor

    def __post_init__(self) -> None:
        if self.mean.shape != self.log_var.shape:
            raise ConfigurationError(
                f"mean {list(self.mean.shape)} and log_var "
                f"{list(self.log_var.shape)} differ in shape"
            )

    def at(self, t: int) -> GaussianParams:
        """Select time step ``t`` of [B, T, ...] parameters."""
        return GaussianParams(self.mean[:, t], self.log_var[:, t])

    @classmethod
    def standard_normal_like(cls, reference: torch.Tensor) -> GaussianParams:
        return cls(torch.zeros_like(reference), torch.zeros_like(reference))


@dataclass(frozen=True)
class ModelConfig:
    """Sizes and switches of the BEV encoder and the dynamics networks.

    Attributes:
        bev_channels: Channels C of a BEV state.
        image_hidden: Trunk width of the per-camera image encoder.
        encoded_channels: Channels c_e of an encoded state (and of encoded
            output modalities).
        latent_channels: Channels c_y of the latent state.
        stochastic_channels: Channels c_z of the per-cell stochastic latent.
        hidden_channels: Width of the dynamics sub-networks.
        obs_variance: Constant observation variance of the state likelihood.
        zero_residual: Zero the last layer of the residual network.
        dropout: Dropout rate inside the down-sampling encoder.
    """

    bev_channels: int = 16
    image_hidden: int = 32
    encoded_channels: int = 24
    latent_channels: int = 16
    stochastic_channels: int = 16
    hidden_channels: int = 32
    obs_variance: float = 1.0
    zero_residual: bool = False
    dropout: float = 0.25

    def __post_init__(self) -> None:
        for name in (
            "bev_channels",
            "image_hidden",
            "encoded_channels",
            "latent_channels",
            "stochastic_channels",
            "hidden_channels",
        ):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1", field=name)
        if self.obs_variance <= 0:
            raise ConfigurationError("obs_variance must be > 0", field="obs_variance")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must be in [0, 1)", field="dropout")
