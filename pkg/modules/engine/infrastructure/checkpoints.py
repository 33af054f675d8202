"""Checkpoint persistence with torch.

A checkpoint is a ``state_dict`` file plus a JSON manifest beside it that
holds the full experiment config, so a model can be rebuilt from the
manifest alone.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import TYPE_CHECKING, Any

import torch

from config.experiment import parse_experiment_config
from modules.dynamics.domain.value_objects import VariantFlag
from modules.engine.application.interfaces import CheckpointRepository, LoadedCheckpoint
from modules.engine.application.use_cases import build_model
from shared.exceptions import ConfigurationError, DataNotFoundError
from shared.logging import get_logger

if TYPE_CHECKING:
    from config.experiment import ExperimentConfig
    from modules.engine.domain.model import StretchBEVModel

logger = get_logger(__name__)

SCHEMA_VERSION = 1
WEIGHTS_NAME = "model.pt"


def manifest_path(weights: Path) -> Path:
    return weights.with_suffix(".json")


class TorchCheckpointRepository(CheckpointRepository):
    """Writes ``model.pt`` and ``model.json`` under a run directory."""

    def __init__(self, root: Path | str) -> None:
        self._root = Path(root)

    @property
    def path(self) -> Path:
        return self._root / WEIGHTS_NAME

    def save(
        self,
        model: StretchBEVModel,
        experiment: ExperimentConfig,
        metadata: dict[str, Any],
    ) -> Path:
        self._root.mkdir(parents=True, exist_ok=True)
        state = {key: value.detach().cpu() for key, value in model.state_dict().items()}
        # Replace atomically so an interrupted write keeps the previous file.
        staging = self.path.with_suffix(".pt.tmp")
        torch.save(state, staging)
        os.replace(staging, self.path)

        manifest = {
            "schema_version": SCHEMA_VERSION,
            "variant": model.variant.value,
            "mode": experiment.train.mode.value,
            "config_hash": experiment.config_hash(),
            "experiment": experiment.model_dump(mode="json"),
            "shapes": {key: list(value.shape) for key, value in state.items()},
            **metadata,
        }
        manifest_path(self.path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        logger.debug("checkpoint_written", path=str(self.path))
        return self.path

    def load_weights(self, path: Path) -> dict[str, torch.Tensor]:
        path = Path(path)
        if not path.exists():
            raise DataNotFoundError("checkpoint", str(path))
        return torch.load(path, map_location="cpu", weights_only=True)

    def load(self, path: Path, device: torch.device | str = "cpu") -> LoadedCheckpoint:
        path = Path(path)
        sidecar = manifest_path(path)
        if not sidecar.exists():
            raise DataNotFoundError("checkpoint manifest", str(sidecar))
        manifest = json.loads(sidecar.read_text(encoding="utf-8"))
        if manifest.get("schema_version") != SCHEMA_VERSION:
            raise ConfigurationError(
                f"unsupported checkpoint schema {manifest.get('schema_version')}",
                field="checkpoint",
            )
        experiment = parse_experiment_config(manifest["experiment"])
        model = build_model(experiment, VariantFlag(manifest["variant"]))

        state = self.load_weights(path)
        expected = model.state_dict()
        mismatched = sorted(
            key
            for key in set(expected) | set(state)
            if key not in state
            or key not in expected
            or tuple(state[key].shape) != tuple(expected[key].shape)
        )
        if mismatched:
            raise ConfigurationError(
                "checkpoint weights do not match its manifest",
                field="checkpoint",
                details=[{"field": key, "message": "missing or mis-shaped"} for key in mismatched],
            )
        model.load_state_dict(state)
        model.to(device).eval()
        logger.info("checkpoint_loaded", path=str(path), variant=model.variant.value)
        return LoadedCheckpoint(model=model, experiment=experiment, manifest=manifest)
