"""Value objects for the engine module."""

from __future__ import annotations

from dataclasses import dataclass, field

from modules.dynamics.domain.value_objects import VariantFlag
from modules.engine.domain.enums import TrainingMode
from modules.heads.domain.value_objects import LossWeights
from modules.metrics.domain.value_objects import NEAR_EXTENT_METERS, Horizon
from shared.exceptions import ConfigurationError


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings of a training run.

    Attributes:
        mode: Pre-training, joint training or fine-tuning.
        variant: Model variant.
        lr: Starting learning rate.
        lr_decay_factor: Multiplier applied on a validation plateau.
        plateau_patience: Non-improving validation epochs before decaying.
        max_epochs: Epoch cap (for pre-training: of the dynamics stage).
        frame_epochs: Epochs of the single-frame stage of pre-training.
        batch_size: Episodes per batch.
        seed: Seed of shuffling, dropout and reparametrization noise.
        finetune_lr_factor: Dynamics learning-rate multiplier when fine-tuning.
        val_fraction: Share of episodes held out for model selection.
        train_horizon: Future steps per training window; ``None`` trains on
            whole episodes.
        loss_weights: Weights of the loss terms.
    """

    mode: TrainingMode = TrainingMode.JOINT
    variant: VariantFlag = VariantFlag.STRETCHBEV
    lr: float = 3e-4
    lr_decay_factor: float = 0.5
    plateau_patience: int = 2
    max_epochs: int = 25
    frame_epochs: int = 5
    batch_size: int = 8
    seed: int = 0
    finetune_lr_factor: float = 0.1
    val_fraction: float = 0.1
    train_horizon: int | None = 4
    loss_weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self) -> None:
        """Validate ranges."""
        if self.lr <= 0:
            raise ConfigurationError("lr must be > 0", field="lr")
        if not 0 < self.lr_decay_factor <= 1:
            raise ConfigurationError("lr_decay_factor must be in (0, 1]", field="lr_decay_factor")
        if self.plateau_patience < 1:
            raise ConfigurationError("plateau_patience must be >= 1", field="plateau_patience")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1", field="max_epochs")
        if self.frame_epochs < 0:
            raise ConfigurationError("frame_epochs must be >= 0", field="frame_epochs")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1", field="batch_size")
        if not 0 < self.finetune_lr_factor <= 1:
            raise ConfigurationError(
                "finetune_lr_factor must be in (0, 1]", field="finetune_lr_factor"
            )
        if not 0 <= self.val_fraction < 1:
            raise ConfigurationError("val_fraction must be in [0, 1)", field="val_fraction")
        if self.train_horizon is not None and self.train_horizon < 1:
            raise ConfigurationError("train_horizon must be >= 1", field="train_horizon")

    def window_len(self, episode_len: int, conditioning_len: int) -> int:
        """Steps per training window for episodes of ``episode_len`` steps."""
        if self.train_horizon is None:
            return episode_len
        return min(episode_len, conditioning_len + self.train_horizon)


@dataclass(frozen=True)
class EvaluationConfig:
    """Evaluation protocol settings.

    Attributes:
        horizons: Horizons to score; each is crossed with near and far.
        n_samples: Rollout samples per episode.
        near_extent: Side of the near crop, meters.
        seed: Seed of the rollout noise.
        mode_tolerance: Centroid tolerance for occupancy-mode counting, cells.
    """

    horizons: tuple[Horizon, ...] = (Horizon.SHORT, Horizon.MID, Horizon.LONG)
    n_samples: int = 10
    near_extent: float = NEAR_EXTENT_METERS
    seed: int = 0
    mode_tolerance: float = 3.0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1", field="n_samples")
        if self.near_extent <= 0:
            raise ConfigurationError("near_extent must be > 0", field="near_extent")
        if not self.horizons:
            raise ConfigurationError("at least one horizon is required", field="horizons")
