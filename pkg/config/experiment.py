"""Experiment configuration: one JSON document for a whole run.

The domain value objects are frozen dataclasses validated in their own
``__post_init__``; this model embeds them so each type is defined once.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from modules.dynamics.domain.value_objects import ModelConfig
from modules.engine.domain.value_objects import EvaluationConfig, TrainConfig
from modules.instances.domain.value_objects import PostprocessConfig
from modules.liftsplat.domain.value_objects import FrustumConfig
from modules.world.domain.value_objects import RigConfig, WorldConfig
from shared.exceptions import ConfigurationError


class ExperimentConfig(BaseModel):
    """Every parameter of a gen-data / train / eval run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    world: WorldConfig = Field(default_factory=WorldConfig)
    rig: RigConfig = Field(default_factory=RigConfig)
    frustum: FrustumConfig = Field(default_factory=FrustumConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    postprocess: PostprocessConfig = Field(default_factory=PostprocessConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    def canonical_json(self) -> str:
        """Key-sorted JSON dump used for hashing and manifests."""
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def _validation_details(exc: ValidationError) -> list[dict[str, Any]]:
    return [
        {"field": ".".join(str(part) for part in error["loc"]), "message": error["msg"]}
        for error in exc.errors()
    ]


def parse_experiment_config(data: dict[str, Any]) -> ExperimentConfig:
    """Validate a decoded config document.

    Raises:
        ConfigurationError: On any validation failure.
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(
            "invalid experiment config", details=_validation_details(exc)
        ) from exc


def load_experiment_config(path: Path | str | None) -> ExperimentConfig:
    """Load an experiment config from JSON; defaults when ``path`` is None.

    Raises:
        ConfigurationError: If the file is missing, is not JSON or fails
            validation.
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}", field="config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}", field="config") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config document must be a JSON object", field="config")
    return parse_experiment_config(data)
