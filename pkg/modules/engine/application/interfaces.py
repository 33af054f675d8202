"""Port interfaces for the engine module.

Use cases depend on these abstractions; the file-system adapters live in
the infrastructure layer.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from pathlib import Path

    import pandas as pd
    import torch

    from config.experiment import ExperimentConfig
    from modules.engine.application.dto import ReportBundle
    from modules.engine.domain.model import StretchBEVModel


@dataclass(frozen=True, eq=False)
class LoadedCheckpoint:
    """A rebuilt model with the experiment and manifest it was saved with."""

    model: StretchBEVModel
    experiment: ExperimentConfig
    manifest: dict[str, Any]


class CheckpointRepository(ABC):
    """Repository interface for model checkpoints."""

    @property
    @abstractmethod
    def path(self) -> Path:
        """Location of the checkpoint written by ``save``."""
        ...

    @abstractmethod
    def save(
        self,
        model: StretchBEVModel,
        experiment: ExperimentConfig,
        metadata: dict[str, Any],
    ) -> Path:
        """Write weights and manifest, replacing any previous checkpoint.

        Returns:
            Path of the weights file.
        """
        ...

    @abstractmethod
    def load(self, path: Path, device: torch.device | str = "cpu") -> LoadedCheckpoint:
        """Rebuild the model stored at ``path`` in evaluation mode.

        Raises:
            DataNotFoundError: If the weights or the manifest are missing.
            ConfigurationError: If the weights do not fit the manifest.
        """
        ...

    @abstractmethod
    def load_weights(self, path: Path) -> dict[str, torch.Tensor]:
        """Read the raw state dict at ``path``.

        Raises:
            DataNotFoundError: If the file is missing.
        """
        ...


class ReportRepository(ABC):
    """Repository interface for training histories and evaluation reports."""

    @abstractmethod
    def write_history(self, rows: list[dict[str, Any]]) -> Path:
        """Write the per-epoch training history."""
        ...

    @abstractmethod
    def write_evaluation(
        self,
        metrics: pd.DataFrame,
        diversity: pd.DataFrame,
        summary: dict[str, Any],
    ) -> Path:
        """Write metric, diversity and summary files.

        Returns:
            Path of the metrics table.
        """
        ...

    @abstractmethod
    def read(self, metrics_path: Path) -> ReportBundle:
        """Read the report whose metrics table is ``metrics_path``.

        Raises:
            DataNotFoundError: If the metrics table does not exist.
        """
        ...


class FigureWriter(ABC):
    """Interface for rendering evaluation figures."""

    @abstractmethod
    def horizon_curves(
        self,
        means: pd.DataFrame,
        value: str,
        training_horizon: int | None,
        path: Path,
    ) -> Path:
        """Draw ``value`` against horizon, one series per variant and region."""
        ...

    @abstractmethod
    def ged_bars(self, means: pd.DataFrame, path: Path) -> Path:
        """Draw a bar per variant and setting of the scaled GED."""
        ...
