"""Unit tests for the image encoder and the batched lift-splat encoder."""

import pytest
import torch

from modules.liftsplat.domain.networks import ImageEncoder, LiftSplatEncoder
from shared.exceptions import ConfigurationError
from tests.gradients import assert_gradients_match


class TestImageEncoder:
    """Tests for ImageEncoder."""

    def test_quarter_resolution_outputs(self):
        """Test that features and depth logits come out at 1/4 scale."""
        encoder = ImageEncoder(6, 18, hidden=8).eval()
        features, logits = encoder(torch.rand(2, 3, 32, 64))
        assert features.shape == (2, 6, 8, 16)
        assert logits.shape == (2, 18, 8, 16)

    def test_zero_head_gives_uniform_depth(self):
        """Test that a zero-initialized head starts from a uniform depth distribution."""
        encoder = ImageEncoder(4, 5, hidden=8, zero_init_head=True).eval()
        _, logits = encoder(torch.zeros(1, 3, 16, 16))
        probs = logits.softmax(dim=1)
        torch.testing.assert_close(probs, torch.full_like(probs, 1 / 5))

    @pytest.mark.parametrize("size", [(30, 64), (32, 62)])
    def test_sides_must_be_multiples_of_four(self, size):
        """Test that image sides not divisible by four are rejected."""
        with pytest.raises(ConfigurationError):
            ImageEncoder(4, 5, hidden=8)(torch.zeros(1, 3, *size))

    def test_rejects_non_rgb_input(self):
        """Test that the channel axis must hold three colors."""
        with pytest.raises(ConfigurationError):
            ImageEncoder(4, 5, hidden=8)(torch.zeros(1, 4, 16, 16))

    def test_gradients_match_finite_differences(self):
        """Test autograd against central differences in float64."""
        torch.manual_seed(0)
        encoder = ImageEncoder(3, 4, hidden=4).double().eval()
        images = torch.rand(1, 3, 8, 8, generator=torch.Generator().manual_seed(1))
        images = images.double()

        def loss():
            features, logits = encoder(images)
            return (features**2).sum() + (logits.softmax(dim=1) * logits).sum()

        assert assert_gradients_match(loss, encoder.parameters(), entries_per_tensor=2) > 0


class TestLiftSplatEncoderGradients:
    """Gradient checks through lift and splat."""

    def test_gradients_match_finite_differences(
        self, tiny_rig, tiny_frustum, tiny_grid, generator
    ):
        """Test that sum-pooling passes exact gradients to the image encoder."""
        torch.manual_seed(0)
        model = LiftSplatEncoder(tiny_rig, tiny_frustum, tiny_grid, channels=2, hidden=4)
        model = model.double().eval()
        images = torch.rand(1, tiny_rig.n_cameras, 3, *tiny_rig.image_size, generator=generator)
        images = images.double()
        weights = torch.rand(2, 16, 16, generator=generator, dtype=torch.float64)

        def loss():
            return (model(images)[0] * weights).sum()

        assert assert_gradients_match(loss, model.parameters(), entries_per_tensor=2) > 0
