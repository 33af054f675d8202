"""Data Transfer Objects for the engine module."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

if TYPE_CHECKING:
    import pandas as pd

    from config.experiment import ExperimentConfig
    from modules.metrics.domain.value_objects import Horizon


@dataclass(frozen=True)
class TrainCommand:
    """Command to train a model.

    Mode and variant are read from ``experiment.train``.
    """

    experiment: ExperimentConfig
    init_checkpoint: Path | None = None


@dataclass(frozen=True)
class StageResultDTO:
    """Outcome of one training stage."""

    stage: str
    epochs: int
    best_epoch: int
    best_val_loss: float


@dataclass(frozen=True)
class TrainingResultDTO:
    """Outcome of a training run."""

    checkpoint_path: Path
    variant: str
    mode: str
    stages: tuple[StageResultDTO, ...]
    config_hash: str


@dataclass(frozen=True)
class EvaluateCommand:
    """Command to evaluate a checkpoint on stored episodes.

    ``split="val"`` scores the held-out episodes of the checkpoint's
    training split; ``split="all"`` scores every stored episode. Horizons,
    sample count and seed left as ``None`` come from the evaluation section
    of the experiment stored with the checkpoint.
    """

    checkpoint_path: Path
    horizons: tuple[Horizon, ...] | None = None
    n_samples: int | None = None
    seed: int | None = None
    split: Literal["val", "all"] = "val"


@dataclass(frozen=True)
class EvaluationResultDTO:
    """Outcome of an evaluation run."""

    report_path: Path
    episodes: int
    metric_rows: int
    diversity_rows: int


@dataclass(frozen=True)
class PlotCommand:
    """Command to draw the figures of one or more evaluation reports."""

    report_paths: tuple[Path, ...]
    out_dir: Path


@dataclass(frozen=True)
class PlotResultDTO:
    figures: tuple[Path, ...]


@dataclass(frozen=True, eq=False)
class ReportBundle:
    """Evaluation report tables read back from disk."""

    metrics: pd.DataFrame
    diversity: pd.DataFrame
    summary: dict[str, Any]
