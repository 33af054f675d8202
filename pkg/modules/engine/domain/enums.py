"""Domain enumerations for the engine module."""

from __future__ import annotations

from enum import Enum


class TrainingMode(str, Enum):
    """How a training run initializes and what it optimizes.

    - PRETRAIN: fit the state extractor on single frames, then the dynamics
      on frozen extracted states.
    - JOINT: train everything end to end from scratch.
    - FINETUNE: continue from a checkpoint with a smaller dynamics rate.
    """

    PRETRAIN = "pretrain"
    JOINT = "joint"
    FINETUNE = "finetune"


class LossStage(str, Enum):
    """Which terms a loss evaluation includes."""

    FRAMES = "frames"
    DYNAMICS = "dynamics"
    JOINT = "joint"
