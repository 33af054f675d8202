"""The full model: lift-splat state extractor, dynamics and heads."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

import torch
from torch import nn

from modules.dynamics.domain.model import RolloutResult, StochasticDynamics
from modules.engine.domain.enums import LossStage
from modules.heads.domain.networks import ModalityDecoder, ModalityEncoder
from modules.heads.domain.services import encode_modalities, modality_losses
from modules.heads.domain.value_objects import ModalityLosses, OutputModalities
from modules.liftsplat.domain.networks import LiftSplatEncoder
from modules.liftsplat.domain.value_objects import BEVGrid
from modules.world.domain.value_objects import CameraRig
from shared.exceptions import NumericalInstabilityError

if TYPE_CHECKING:
    from modules.dynamics.domain.value_objects import ModelConfig, VariantFlag
    from modules.engine.domain.entities import EpisodeBatch
    from modules.heads.domain.value_objects import LossWeights, ModalityTargets
    from modules.liftsplat.domain.value_objects import FrustumConfig
    from modules.world.domain.value_objects import RigConfig, WorldConfig


@dataclass(frozen=True, eq=False)
class LossBreakdown:
    """Weighted loss terms; ``total`` is their sum in field order.

    ``state_nll`` and ``kl`` are the negative ELBO terms divided by the
    number of state elements.
    """

    state_nll: torch.Tensor
    kl: torch.Tensor
    seg: torch.Tensor
    center: torch.Tensor
    offset: torch.Tensor
    flow: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.state_nll + self.kl + self.seg + self.center + self.offset + self.flow

    def as_floats(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


class StretchBEVModel(nn.Module):
    """Images to BEV states, states to futures, futures to modalities.

    Args:
        world: World configuration (grid and conditioning length).
        rig_config: Camera rig description.
        frustum: Depth slicing.
        config: Network sizes.
        variant: Model variant.
    """

    def __init__(
        self,
        world: WorldConfig,
        rig_config: RigConfig,
        frustum: FrustumConfig,
        config: ModelConfig,
        variant: VariantFlag,
    ) -> None:
        super().__init__()
        self.variant = variant
        self.conditioning_len = world.conditioning_len
        self.state_extractor = LiftSplatEncoder(
            CameraRig.from_config(rig_config),
            frustum,
            BEVGrid(world.grid_cells, world.cell_size),
            config.bev_channels,
            config.image_hidden,
        )
        self.dynamics = StochasticDynamics(config, world.conditioning_len, variant)
        self.heads = ModalityDecoder(config.bev_channels, config.hidden_channels)
        self.modality_encoder = (
            ModalityEncoder(config.encoded_channels, config.hidden_channels)
            if variant.uses_modalities
            else None
        )

    def extract_states(self, images: torch.Tensor) -> torch.Tensor:
        """Fuse [B, T, N, 3, h, w] images into states [B, T, C, H, W]."""
        batch, steps = images.shape[:2]
        states = self.state_extractor(images.flatten(0, 1))
        return states.reshape(batch, steps, *states.shape[1:])

    def encoded_modalities(self, targets: ModalityTargets) -> torch.Tensor | None:
        """Label encodings for the modality-conditioned posterior, else None."""
        if self.modality_encoder is None:
            return None
        return encode_modalities(targets, self.modality_encoder)

    def extractor_parameters(self) -> list[nn.Parameter]:
        return [*self.state_extractor.parameters(), *self.heads.parameters()]

    def dynamics_parameters(self) -> list[nn.Parameter]:
        params = list(self.dynamics.parameters())
        if self.modality_encoder is not None:
            params += list(self.modality_encoder.parameters())
        return params

    def compute_loss(
        self,
        batch: EpisodeBatch,
        stage: LossStage,
        weights: LossWeights,
        generator: torch.Generator | None = None,
    ) -> LossBreakdown:
        """Weighted loss terms of one batch.

        - FRAMES: modality losses on the extracted states of every frame.
        - DYNAMICS: ELBO on states from a frozen extractor.
        - JOINT: ELBO plus modality losses on the reconstructed states.

        Raises:
            NumericalInstabilityError: If the total is not finite.
        """
        zero = batch.images.new_zeros(())
        supervised = ModalityLosses.zeros(zero)
        state_nll = kl = zero

        if stage is LossStage.DYNAMICS:
            with torch.no_grad():
                states = self.extract_states(batch.images)
        else:
            states = self.extract_states(batch.images)

        if stage is LossStage.FRAMES:
            supervised = modality_losses(self.heads(states), batch.targets)
        else:
            terms = self.dynamics.elbo(
                states, self.encoded_modalities(batch.targets), generator, detach_targets=True
            )
            state_nll = -weights.state_nll * terms.nll_term / terms.state_elements
            kl = weights.kl * (terms.kl_y1 + terms.kl_z_sum) / terms.state_elements
            if stage is LossStage.JOINT:
                supervised = modality_losses(self.heads(terms.reconstruction), batch.targets)

        breakdown = LossBreakdown(
            state_nll=state_nll,
            kl=kl,
            seg=weights.seg * supervised.seg,
            center=weights.center * supervised.center,
            offset=weights.offset * supervised.offset,
            flow=weights.flow * supervised.flow,
        )
        if not torch.isfinite(breakdown.total):
            raise NumericalInstabilityError(
                "training loss is not finite", diagnostics=breakdown.as_floats()
            )
        return breakdown

    @torch.no_grad()
    def predict(
        self,
        batch: EpisodeBatch,
        horizon: int,
        n_samples: int,
        generator: torch.Generator | None = None,
        zero_noise: bool = False,
    ) -> tuple[RolloutResult, OutputModalities]:
        """Roll out futures from the first k frames and decode them.

        Returns:
            The rollout and the modalities of its future states, shaped
            [B, S, horizon, ...].
        """
        k = self.conditioning_len
        states = self.extract_states(batch.images[:, :k])
        modalities = self.encoded_modalities(batch.targets.map(lambda x: x[:, :k]))
        rollout = self.dynamics.rollout(
            states,
            horizon,
            n_samples,
            conditioning_modalities=modalities,
            generator=generator,
            zero_noise=zero_noise,
        )
        return rollout, self.heads(rollout.future)
