"""Supervised losses and label encoding for the output modalities."""

from __future__ import annotations

from typing import TYPE_CHECKING

import torch
import torch.nn.functional as F

from modules.heads.domain.value_objects import (
    ModalityLosses,
    ModalityTargets,
    OutputModalities,
)
from shared.exceptions import ConfigurationError

if TYPE_CHECKING:
    from modules.heads.domain.networks import ModalityDecoder, ModalityEncoder

MAX_FOREGROUND_WEIGHT = 50.0


def decode_modalities(states: torch.Tensor, decoder: ModalityDecoder) -> OutputModalities:
    """Decode [..., C, H, W] states; each frame is decoded on its own."""
    return decoder(states)


def encode_modalities(targets: ModalityTargets, encoder: ModalityEncoder) -> torch.Tensor:
    """Encode label maps to the latent resolution."""
    return encoder(targets.as_channels())


def foreground_weight(segmentation: torch.Tensor) -> float:
    """Cross-entropy weight of the vehicle class for this batch.

    ``background / foreground`` cell count clamped to [1, 50]; 1 when the
    batch has no foreground.
    """
    foreground = float(segmentation.sum())
    if foreground == 0:
        return 1.0
    background = segmentation.numel() - foreground
    return min(max(background / foreground, 1.0), MAX_FOREGROUND_WEIGHT)


def masked_l1(pred: torch.Tensor, target: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean over masked cells of the channel-summed absolute error.

    ``pred``/``target`` are [N, 2, H, W] and ``mask`` is [N, H, W]; an empty
    mask gives exactly 0.
    """
    if not mask.any():
        return (pred * 0.0).sum()
    per_cell = (pred - target).abs().sum(dim=1)
    return per_cell[mask].mean()


def modality_losses(pred: OutputModalities, target: ModalityTargets) -> ModalityLosses:
    """Segmentation cross-entropy, center MSE and masked offset/flow L1.

    Raises:
        ConfigurationError: If prediction and target shapes disagree.
    """
    if pred.seg_logits.shape[:-3] + pred.seg_logits.shape[-2:] != target.segmentation.shape:
        raise ConfigurationError("prediction and target spatial layouts differ")
    h, w = target.segmentation.shape[-2:]
    logits = pred.seg_logits.reshape(-1, 2, h, w)
    seg_target = target.segmentation.reshape(-1, h, w)
    mask = seg_target > 0.5

    def as_vectors(field: torch.Tensor) -> torch.Tensor:
        return field.reshape(-1, 2, h, w)

    weight = logits.new_tensor([1.0, foreground_weight(seg_target)])
    return ModalityLosses(
        seg=F.cross_entropy(logits, mask.long(), weight=weight),
        center=F.mse_loss(pred.center, target.center),
        offset=masked_l1(as_vectors(pred.offset), as_vectors(target.offset), mask),
        flow=masked_l1(as_vectors(pred.flow), as_vectors(target.flow), mask),
    )
