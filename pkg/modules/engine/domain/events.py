"""Domain events for the engine module."""

from __future__ import annotations

from typing import Any, ClassVar

from contracts.events.base import BaseEvent


class EpochCompleted(BaseEvent):
    """Event raised after every training epoch."""

    _event_type: ClassVar[str] = "engine.epoch.completed"

    stage: str
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


class CheckpointSaved(BaseEvent):
    """Event raised when a new best checkpoint has been written."""

    _event_type: ClassVar[str] = "engine.checkpoint.saved"

    path: str
    stage: str
    epoch: int
    val_loss: float


class TrainingAborted(BaseEvent):
    """Event raised when training stops on a non-finite loss."""

    _event_type: ClassVar[str] = "engine.training.aborted"

    stage: str
    epoch: int
    reason: str
    diagnostics: dict[str, Any]


class EvaluationCompleted(BaseEvent):
    """Event raised when evaluation reports have been written."""

    _event_type: ClassVar[str] = "engine.evaluation.completed"

    episodes: int
    metric_rows: int
    report_path: str
