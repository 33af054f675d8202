"""Diagonal Gaussian helpers: reparametrized sampling, KL, log-likelihood."""

from __future__ import annotations

import math

import torch

from modules.dynamics.domain.value_objects import GaussianParams
from shared.exceptions import ConfigurationError


def sample_gaussian(params: GaussianParams, noise: torch.Tensor) -> torch.Tensor:
    """Reparametrized sample ``mean + exp(0.5 * log_var) * noise``.

    Raises:
        ConfigurationError: If ``noise`` does not match the parameter shape.
    """
    if noise.shape != params.mean.shape:
        raise ConfigurationError(
            f"noise {list(noise.shape)} does not match {list(params.mean.shape)}"
        )
    return params.mean + torch.exp(0.5 * params.log_var) * noise


def kl_diag_gauss_elementwise(q: GaussianParams, p: GaussianParams) -> torch.Tensor:
    """Per-element ``KL(q || p)`` of two diagonal Gaussians."""
    if q.mean.shape != p.mean.shape:
        raise ConfigurationError("KL arguments differ in shape")
    return 0.5 * (
        p.log_var
        - q.log_var
        + (q.log_var.exp() + (q.mean - p.mean) ** 2) / p.log_var.exp()
        - 1.0
    )


def kl_diag_gauss(q: GaussianParams, p: GaussianParams) -> torch.Tensor:
    """``KL(q || p)`` summed over all elements."""
    return kl_diag_gauss_elementwise(q, p).sum()


def kl_per_sample(q: GaussianParams, p: GaussianParams) -> torch.Tensor:
    """``KL(q || p)`` summed over all but the leading batch dimension."""
    return kl_diag_gauss_elementwise(q, p).flatten(1).sum(dim=1)


def gaussian_log_likelihood(
    target: torch.Tensor, mean: torch.Tensor, variance: float
) -> torch.Tensor:
    """Per-element ``log N(target; mean, variance)`` with a scalar variance."""
    return -0.5 * (math.log(2.0 * math.pi * variance) + (target - mean) ** 2 / variance)
