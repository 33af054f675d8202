"""Pytest configuration and shared fixtures.

This module provides tiny configurations so networks, simulations and
pipelines run in a fraction of a second on a CPU.
"""

from __future__ import annotations

import pytest
import torch

from config.experiment import ExperimentConfig
from modules.dynamics.domain.value_objects import ModelConfig
from modules.engine.domain.value_objects import EvaluationConfig, TrainConfig
from modules.liftsplat.domain.value_objects import BEVGrid, FrustumConfig
from modules.metrics.domain.value_objects import Horizon
from modules.world.domain.value_objects import CameraRig, RigConfig, WorldConfig
from shared.events import RecordingEventPublisher
from shared.seeding import numpy_generator, torch_generator


@pytest.fixture
def tiny_world() -> WorldConfig:
    """Return a 16-cell world with one or two agents and 7-step episodes.

    Returns:
        World configuration.
    """
    return WorldConfig(
        grid_cells=16,
        cell_size=1.0,
        n_agents=(1, 2),
        episode_len=7,
        conditioning_len=3,
        seed=3,
    )


@pytest.fixture
def tiny_rig_config() -> RigConfig:
    """Return a two-camera rig with 8x16 images.

    Returns:
        Rig configuration.
    """
    return RigConfig(n_cameras=2, image_size=(8, 16))


@pytest.fixture
def tiny_rig(tiny_rig_config: RigConfig) -> CameraRig:
    """Return the camera rig built from ``tiny_rig_config``.

    Returns:
        Camera rig.
    """
    return CameraRig.from_config(tiny_rig_config)


@pytest.fixture
def tiny_frustum() -> FrustumConfig:
    """Return a four-bin frustum between 1 m and 9 m.

    Returns:
        Frustum configuration.
    """
    return FrustumConfig(d_min=1.0, d_max=9.0, d_size=2.0)


@pytest.fixture
def tiny_grid(tiny_world: WorldConfig) -> BEVGrid:
    """Return the BEV grid of ``tiny_world``.

    Returns:
        BEV grid.
    """
    return BEVGrid(tiny_world.grid_cells, tiny_world.cell_size)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Return narrow networks.

    Returns:
        Model configuration.
    """
    return ModelConfig(
        bev_channels=4,
        image_hidden=8,
        encoded_channels=4,
        latent_channels=4,
        stochastic_channels=2,
        hidden_channels=8,
    )


@pytest.fixture
def tiny_experiment(
    tiny_world: WorldConfig,
    tiny_rig_config: RigConfig,
    tiny_frustum: FrustumConfig,
    tiny_model_config: ModelConfig,
) -> ExperimentConfig:
    """Return an experiment of one short epoch on the tiny world.

    Returns:
        Experiment configuration.
    """
    return ExperimentConfig(
        world=tiny_world,
        rig=tiny_rig_config,
        frustum=tiny_frustum,
        model=tiny_model_config,
        train=TrainConfig(
            max_epochs=1,
            frame_epochs=1,
            batch_size=2,
            val_fraction=0.25,
            train_horizon=4,
        ),
        evaluation=EvaluationConfig(horizons=(Horizon.SHORT,), n_samples=3, near_extent=8.0),
    )


@pytest.fixture
def rng():
    """Return a seeded numpy generator.

    Returns:
        numpy Generator.
    """
    return numpy_generator(0)


@pytest.fixture
def generator() -> torch.Generator:
    """Return a seeded torch generator.

    Returns:
        torch Generator.
    """
    return torch_generator(0)


@pytest.fixture
def event_publisher() -> RecordingEventPublisher:
    """Return a publisher that records events in memory.

    Returns:
        Recording publisher.
    """
    return RecordingEventPublisher()


@pytest.fixture
def run_id() -> str:
    """Return a fixed run identifier.

    Returns:
        Run id.
    """
    return "test-run"
