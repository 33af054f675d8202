"""Training helpers and per-episode scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import torch

from modules.instances.domain.services import instances_from_modalities
from modules.metrics.domain.services import (
    GED_SCALE,
    apply_setting,
    count_occupancy_modes,
    ged_from_sequences,
    iou,
    vpq,
)

if TYPE_CHECKING:
    from modules.engine.domain.value_objects import TrainConfig
    from modules.heads.domain.value_objects import OutputModalities
    from modules.instances.domain.value_objects import PostprocessConfig
    from modules.metrics.domain.value_objects import EvalSetting

COPY_LAST = "copy-last"
ZERO_NOISE_SUFFIX = "-zero-noise"


# =============================================================================
# Training
# =============================================================================


def split_by_seed(seeds: dict[int, int], val_fraction: float) -> tuple[list[int], list[int]]:
    """Partition episode indices by seed into training and validation.

    The episodes with the largest seeds, ``ceil(val_fraction * n)`` of them,
    are held out. With a single episode it serves both roles.

    Returns:
        ``(train_indices, val_indices)``, each sorted.
    """
    ordered = sorted(seeds, key=lambda index: (seeds[index], index))
    if len(ordered) < 2 or val_fraction == 0:
        return sorted(ordered), sorted(ordered)
    n_val = min(max(math.ceil(val_fraction * len(ordered)), 1), len(ordered) - 1)
    return sorted(ordered[:-n_val]), sorted(ordered[-n_val:])


def build_plateau_scheduler(
    optimizer: torch.optim.Optimizer, config: TrainConfig
) -> torch.optim.lr_scheduler.ReduceLROnPlateau:
    """Decay every group's rate by ``lr_decay_factor`` once the validation
    loss has not strictly improved for ``plateau_patience`` epochs in a row.
    """
    return torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer,
        mode="min",
        factor=config.lr_decay_factor,
        patience=config.plateau_patience - 1,
        threshold=0.0,
    )


# =============================================================================
# Evaluation
# =============================================================================


@dataclass(frozen=True)
class MetricRow:
    episode: int
    variant: str
    horizon: str
    horizon_steps: int
    region: str
    iou: float
    vpq: float
    iou_mean_rollout: float
    vpq_mean_rollout: float


@dataclass(frozen=True)
class DiversityRow:
    episode: int
    variant: str
    horizon: str
    horizon_steps: int
    region: str
    ged: float
    n_samples: int
    modes: int


@dataclass(frozen=True, eq=False)
class PredictedSequence:
    """Post-processed prediction of one sample: [T', H, W] arrays."""

    segmentation: np.ndarray
    instances: np.ndarray


def postprocess_samples(
    modalities: OutputModalities, config: PostprocessConfig
) -> list[PredictedSequence]:
    """Turn decoded modalities [S, T', ...] of one episode into instance maps."""
    seg = modalities.segmentation.cpu().numpy()
    center = modalities.center.cpu().numpy()
    offset = modalities.offset.cpu().numpy()
    flow = modalities.flow.cpu().numpy()
    return [
        PredictedSequence(
            segmentation=seg[s],
            instances=instances_from_modalities(seg[s], center[s], offset[s], flow[s], config).maps,
        )
        for s in range(seg.shape[0])
    ]


def copy_last_baseline(
    segmentation: np.ndarray, instances: np.ndarray, conditioning_len: int, horizon: int
) -> PredictedSequence:
    """Repeat the last conditioning frame's ground truth over the horizon."""
    last = conditioning_len - 1
    return PredictedSequence(
        segmentation=np.repeat(segmentation[last : last + 1], horizon, axis=0),
        instances=np.repeat(instances[last : last + 1], horizon, axis=0),
    )


def score_episode(
    episode: int,
    variant: str,
    samples: list[PredictedSequence],
    mean_rollout: PredictedSequence,
    gt: PredictedSequence,
    settings: list[EvalSetting],
    cell_size: float,
    near_extent: float,
    mode_tolerance: float = 3.0,
) -> tuple[list[MetricRow], list[DiversityRow]]:
    """Score one episode's predicted futures under every setting.

    ``iou``/``vpq`` are the best over samples; the ``*_mean_rollout``
    columns score the zero-noise rollout. Diversity rows are emitted for
    the sampled model and for its zero-noise ablation when there are at
    least two samples.

    Args:
        episode: Episode index.
        variant: Variant label of the rows.
        samples: Sampled predictions over the future frames.
        mean_rollout: Zero-noise prediction over the future frames.
        gt: Ground truth over the future frames.
        settings: Settings to score.
        cell_size: Grid resolution, meters.
        near_extent: Near crop side, meters.
        mode_tolerance: Centroid tolerance of mode counting, cells.
    """
    metric_rows: list[MetricRow] = []
    diversity_rows: list[DiversityRow] = []

    def crop(array: np.ndarray, setting: EvalSetting) -> np.ndarray:
        return apply_setting(array, setting, cell_size, 0, near_extent)

    for setting in settings:
        gt_seg, gt_inst = crop(gt.segmentation, setting), crop(gt.instances, setting)
        sample_seg = [crop(s.segmentation, setting) for s in samples]
        sample_inst = [crop(s.instances, setting) for s in samples]
        mean_inst = crop(mean_rollout.instances, setting)
        metric_rows.append(
            MetricRow(
                episode=episode,
                variant=variant,
                horizon=setting.horizon.value,
                horizon_steps=setting.horizon.steps,
                region=setting.region.value,
                iou=max(iou(s, gt_seg) for s in sample_seg),
                vpq=max(vpq(s, gt_inst) for s in sample_inst),
                iou_mean_rollout=iou(crop(mean_rollout.segmentation, setting), gt_seg),
                vpq_mean_rollout=vpq(mean_inst, gt_inst),
            )
        )
        if len(samples) < 2:
            continue
        ablation = [mean_inst] * len(samples)
        for label, sequences, finals in (
            (variant, sample_inst, [s[-1] for s in sample_seg]),
            (variant + ZERO_NOISE_SUFFIX, ablation, [mean_inst[-1] > 0] * len(samples)),
        ):
            diversity_rows.append(
                DiversityRow(
                    episode=episode,
                    variant=label,
                    horizon=setting.horizon.value,
                    horizon_steps=setting.horizon.steps,
                    region=setting.region.value,
                    ged=GED_SCALE * ged_from_sequences(sequences, [gt_inst]),
                    n_samples=len(samples),
                    modes=count_occupancy_modes(finals, mode_tolerance),
                )
            )
    return metric_rows, diversity_rows


def score_baseline(
    episode: int,
    baseline: PredictedSequence,
    gt: PredictedSequence,
    settings: list[EvalSetting],
    cell_size: float,
    near_extent: float,
) -> list[MetricRow]:
    """Metric rows of the copy-last-frame baseline (both columns equal)."""
    rows = []
    for setting in settings:
        seg_score = iou(
            apply_setting(baseline.segmentation, setting, cell_size, 0, near_extent),
            apply_setting(gt.segmentation, setting, cell_size, 0, near_extent),
        )
        inst_score = vpq(
            apply_setting(baseline.instances, setting, cell_size, 0, near_extent),
            apply_setting(gt.instances, setting, cell_size, 0, near_extent),
        )
        rows.append(
            MetricRow(
                episode=episode,
                variant=COPY_LAST,
                horizon=setting.horizon.value,
                horizon_steps=setting.horizon.steps,
                region=setting.region.value,
                iou=seg_score,
                vpq=inst_score,
                iou_mean_rollout=seg_score,
                vpq_mean_rollout=inst_score,
            )
        )
    return rows
