"""The stochastic residual state-space model.

Generative side: ``y_1 ~ N(0, I)``, ``z_t ~ p(z_t | y_{t-1})``,
``y_t = y_{t-1} + f(y_{t-1}, z_t)`` and ``s_t ~ N(g(y_t), sigma^2 I)``.
Inference side: ``q(y_1 | s_{1:k})`` and a causal recurrent
``q(z_t | s_{1:t} [, o_{2:t}])``.

Sequences are batched as [B, T, C, H, W]; time index 0 is the first step.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from modules.dynamics.domain.distributions import (
    gaussian_log_likelihood,
    kl_per_sample,
    sample_gaussian,
)
from modules.dynamics.domain.exceptions import ConditioningLengthError, VariantContractError
from modules.dynamics.domain.networks import (
    DownsamplingEncoder,
    GaussianNet,
    PosteriorNet,
    ResidualNet,
    UpsamplingDecoder,
)
from modules.dynamics.domain.value_objects import GaussianParams, ModelConfig, VariantFlag
from shared.exceptions import ConfigurationError, NumericalInstabilityError

LATENT_DOWNSAMPLE = 4


@dataclass(frozen=True, eq=False)
class ELBOTerms:
    """Batch-mean ELBO components.

    Attributes:
        nll_term: Log-likelihood of the states, ``sum_t log p(s_t | y_t)``.
        kl_y1: ``KL(q(y_1 | s_{1:k}) || N(0, I))``.
        kl_z_sum: ``sum_{t>=2} KL(q(z_t | .) || p(z_t | y_{t-1}))``.
        total: ``nll_term - kl_y1 - kl_z_sum``.
        state_elements: Number of state elements per sequence.
        reconstruction: Decoded state means [B, T, C, H, W].
    """

    nll_term: torch.Tensor
    kl_y1: torch.Tensor
    kl_z_sum: torch.Tensor
    total: torch.Tensor
    state_elements: int
    reconstruction: torch.Tensor

    def normalized_loss(self) -> torch.Tensor:
        """Negative ELBO divided by the number of state elements."""
        return -self.total / self.state_elements

    def as_floats(self) -> dict[str, float]:
        return {
            "nll_term": float(self.nll_term),
            "kl_y1": float(self.kl_y1),
            "kl_z_sum": float(self.kl_z_sum),
            "total": float(self.total),
        }


@dataclass(frozen=True, eq=False)
class RolloutResult:
    """Sampled trajectories.

    Attributes:
        states: Decoded states [B, S, k + horizon, C, H, W].
        latents: Latent states [B, S, k + horizon, c_y, h, w].
        conditioning_len: k.
    """

    states: torch.Tensor
    latents: torch.Tensor
    conditioning_len: int

    @property
    def future(self) -> torch.Tensor:
        """Predicted future states [B, S, horizon, C, H, W]."""
        return self.states[:, :, self.conditioning_len :]

    @property
    def n_samples(self) -> int:
        return int(self.states.shape[1])


def draw_noise(
    like: torch.Tensor, generator: torch.Generator | None, zero_noise: bool
) -> torch.Tensor:
    """Standard-normal noise shaped like ``like``; zeros in zero-noise mode."""
    if zero_noise:
        return torch.zeros_like(like)
    device = generator.device if generator is not None else like.device
    noise = torch.randn(like.shape, generator=generator, dtype=like.dtype, device=device)
    return noise.to(like.device)


class StochasticDynamics(nn.Module):
    """Residual state-space model over BEV state sequences.

    Args:
        config: Network sizes and switches.
        conditioning_len: Number k of conditioning steps.
        variant: Whether the posterior also consumes encoded modalities.
    """

    def __init__(
        self,
        config: ModelConfig,
        conditioning_len: int,
        variant: VariantFlag = VariantFlag.STRETCHBEV,
    ) -> None:
        super().__init__()
        if conditioning_len < 1:
            raise ConfigurationError("conditioning_len must be >= 1", field="conditioning_len")
        self.config = config
        self.conditioning_len = conditioning_len
        self.variant = variant
        c_e, c_y, c_z = (
            config.encoded_channels,
            config.latent_channels,
            config.stochastic_channels,
        )
        hidden = config.hidden_channels
        posterior_in = 2 * c_e if variant.uses_modalities else c_e

        self.encoder = DownsamplingEncoder(config.bev_channels, c_e, hidden, config.dropout)
        self.decoder = UpsamplingDecoder(c_y, config.bev_channels, hidden)
        self.first_latent = GaussianNet(conditioning_len * c_e, c_y, hidden)
        self.prior = GaussianNet(c_y, c_z, hidden)
        self.posterior = PosteriorNet(posterior_in, c_z, hidden)
        self.residual = ResidualNet(c_y, c_z, hidden, zero_init=config.zero_residual)

    # ------------------------------------------------------------------
    # Building blocks
    # ------------------------------------------------------------------

    def encode_state(self, states: torch.Tensor) -> torch.Tensor:
        """Encode [..., C, H, W] states to [..., c_e, H/4, W/4]."""
        if states.shape[-1] % LATENT_DOWNSAMPLE or states.shape[-2] % LATENT_DOWNSAMPLE:
            raise ConfigurationError(
                f"state sides must be multiples of {LATENT_DOWNSAMPLE}, got {list(states.shape)}"
            )
        lead = states.shape[:-3]
        encoded = self.encoder(states.reshape(-1, *states.shape[-3:]))
        return encoded.reshape(*lead, *encoded.shape[1:])

    def decode_state(self, latents: torch.Tensor) -> torch.Tensor:
        """Decode [..., c_y, h, w] latents to state means [..., C, 4h, 4w]."""
        lead = latents.shape[:-3]
        decoded = self.decoder(latents.reshape(-1, *latents.shape[-3:]))
        return decoded.reshape(*lead, *decoded.shape[1:])

    def infer_first_latent(self, encoded: torch.Tensor) -> GaussianParams:
        """``q(y_1 | s_{1:k})`` from encoded states [B, k, c_e, h, w]."""
        if encoded.shape[1] != self.conditioning_len:
            raise ConditioningLengthError(str(self.conditioning_len), encoded.shape[1])
        return self.first_latent(encoded.flatten(1, 2))

    def prior_z(self, y_prev: torch.Tensor) -> GaussianParams:
        """``p(z_t | y_{t-1})``; reads nothing but ``y_prev``."""
        return self.prior(y_prev)

    def posterior_z(
        self, encoded: torch.Tensor, encoded_modalities: torch.Tensor | None = None
    ) -> GaussianParams:
        """Per-step ``q(z_t | .)`` for encoded states [B, T, c_e, h, w].

        In the modality-conditioned variant the first step's modalities are
        replaced by zeros, so step t sees ``o_{2:t}``.

        Raises:
            VariantContractError: If modalities are given to the plain
                variant or withheld from the modality-conditioned one.
        """
        if self.variant.uses_modalities != (encoded_modalities is not None):
            raise VariantContractError(self.variant.value, encoded_modalities is not None)
        inputs = encoded
        if encoded_modalities is not None:
            if encoded_modalities.shape != encoded.shape:
                raise ConfigurationError("modality encodings must match the encoded states")
            masked = torch.cat(
                [torch.zeros_like(encoded_modalities[:, :1]), encoded_modalities[:, 1:]], dim=1
            )
            inputs = torch.cat([encoded, masked], dim=2)
        return self.posterior(inputs)

    def residual_step(self, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """``y + f(y, z)``."""
        return y + self.residual(y, z)

    # ------------------------------------------------------------------
    # Objective and sampling
    # ------------------------------------------------------------------

    def elbo(
        self,
        states: torch.Tensor,
        encoded_modalities: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
        detach_targets: bool = True,
    ) -> ELBOTerms:
        """One reparametrized posterior pass over [B, T, C, H, W] states.

        Args:
            states: State sequence with T > k.
            encoded_modalities: [B, T, c_e, h, w] for the modality variant.
            generator: Source of the reparametrization noise.
            detach_targets: Stop gradients through the likelihood targets.

        Returns:
            Batch-mean ELBO terms.

        Raises:
            ConditioningLengthError: If T <= k.
            NumericalInstabilityError: If any term is non-finite.
        """
        steps = states.shape[1]
        k = self.conditioning_len
        if steps <= k:
            raise ConditioningLengthError(f"more than {k}", steps)

        encoded = self.encode_state(states)
        q_y1 = self.infer_first_latent(encoded[:, :k])
        y = sample_gaussian(q_y1, draw_noise(q_y1.mean, generator, False))
        q_z = self.posterior_z(encoded, encoded_modalities)

        latents = [y]
        kl_z = torch.zeros(states.shape[0], dtype=states.dtype, device=states.device)
        for t in range(1, steps):
            q_t = q_z.at(t)
            z = sample_gaussian(q_t, draw_noise(q_t.mean, generator, False))
            kl_z = kl_z + kl_per_sample(q_t, self.prior_z(y))
            y = self.residual_step(y, z)
            latents.append(y)

        reconstruction = self.decode_state(torch.stack(latents, dim=1))
        target = states.detach() if detach_targets else states
        log_lik = gaussian_log_likelihood(target, reconstruction, self.config.obs_variance)

        nll_term = log_lik.flatten(1).sum(dim=1).mean()
        kl_y1 = kl_per_sample(q_y1, GaussianParams.standard_normal_like(q_y1.mean)).mean()
        kl_z_sum = kl_z.mean()
        terms = ELBOTerms(
            nll_term=nll_term,
            kl_y1=kl_y1,
            kl_z_sum=kl_z_sum,
            total=nll_term - kl_y1 - kl_z_sum,
            state_elements=states[0].numel(),
            reconstruction=reconstruction,
        )
        if not torch.isfinite(terms.total):
            raise NumericalInstabilityError("ELBO is not finite", diagnostics=terms.as_floats())
        return terms

    def rollout(
        self,
        conditioning: torch.Tensor,
        horizon: int,
        n_samples: int = 1,
        conditioning_modalities: torch.Tensor | None = None,
        generator: torch.Generator | None = None,
        zero_noise: bool = False,
    ) -> RolloutResult:
        """Sample futures from k conditioning states [B, k, C, H, W].

        ``y_1`` and ``z_{2:k}`` come from the posterior; ``z_t`` for ``t > k``
        from the learned prior. States are decoded from each latent alone.

        Raises:
            ConfigurationError: If horizon or n_samples is below 1.
            ConditioningLengthError: If the conditioning is not k steps.
        """
        if horizon < 1 or n_samples < 1:
            raise ConfigurationError("horizon and n_samples must be >= 1")
        k = self.conditioning_len
        if conditioning.shape[1] != k:
            raise ConditioningLengthError(str(k), conditioning.shape[1])

        encoded = self.encode_state(conditioning).repeat_interleave(n_samples, dim=0)
        modalities = None
        if conditioning_modalities is not None:
            modalities = conditioning_modalities.repeat_interleave(n_samples, dim=0)

        q_y1 = self.infer_first_latent(encoded)
        y = sample_gaussian(q_y1, draw_noise(q_y1.mean, generator, zero_noise))
        q_z = self.posterior_z(encoded, modalities)
        latents = [y]
        for t in range(1, k + horizon):
            dist = q_z.at(t) if t < k else self.prior_z(y)
            z = sample_gaussian(dist, draw_noise(dist.mean, generator, zero_noise))
            y = self.residual_step(y, z)
            latents.append(y)

        stacked = torch.stack(latents, dim=1)
        states = self.decode_state(stacked)
        batch = conditioning.shape[0]
        return RolloutResult(
            states=states.reshape(batch, n_samples, *states.shape[1:]),
            latents=stacked.reshape(batch, n_samples, *stacked.shape[1:]),
            conditioning_len=k,
        )
