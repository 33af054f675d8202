"""Seed derivation and global RNG seeding.

Every random stream in the lab is derived from an explicit integer seed so
runs are reproducible from (config, seed) alone.
"""

from __future__ import annotations

import random

import numpy as np
import torch


def derive_seed(base_seed: int, *keys: int) -> int:
    """Derive a child seed from a base seed and integer keys.

    Args:
        base_seed: Parent seed.
        *keys: Path of integer keys (e.g. episode index).

    Returns:
        A 63-bit seed that depends only on the inputs.
    """
    sequence = np.random.SeedSequence([base_seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def numpy_generator(seed: int, *keys: int) -> np.random.Generator:
    """Return a PCG64 generator for a derived seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def torch_generator(seed: int) -> torch.Generator:
    """Return a CPU torch generator seeded with ``seed``."""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator


def seed_everything(seed: int, threads: int = 1) -> None:
    """Seed the global Python, numpy and torch RNGs and pin torch threads.

    Args:
        seed: Seed for all global generators.
        threads: Intra-op thread count; fixed so reductions are reproducible.
    """
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    torch.set_num_threads(threads)
    torch.use_deterministic_algorithms(True, warn_only=True)
