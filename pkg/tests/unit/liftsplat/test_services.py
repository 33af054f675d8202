"""Unit tests for lift, splat and frame fusion."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.liftsplat.domain.networks import ImageEncoder, LiftSplatEncoder
from modules.liftsplat.domain.services import (
    LiftedPoints,
    encode_image,
    fuse_frame,
    ground_cell_index,
    lift,
    splat,
)
from modules.liftsplat.domain.value_objects import BEVGrid, FrustumConfig
from modules.world.domain.entities import MultiCamFrame
from modules.world.domain.value_objects import (
    Camera,
    CameraRig,
    RigConfig,
    pinhole_intrinsics,
)
from shared.exceptions import ConfigurationError


@pytest.fixture
def encoder(tiny_frustum):
    """Return a float64 image encoder in eval mode."""
    torch.manual_seed(0)
    return ImageEncoder(3, tiny_frustum.n_depth, hidden=8).double().eval()


@pytest.fixture
def frame(tiny_rig, generator):
    """Return random images for every camera of the tiny rig."""
    images = torch.rand(tiny_rig.n_cameras, 3, *tiny_rig.image_size, generator=generator)
    return MultiCamFrame(images=images.double().numpy())


def _random_map(shape, seed):
    return torch.randn(*shape, generator=torch.Generator().manual_seed(seed), dtype=torch.float64)


class TestLift:
    """Tests for lifting features into the frustum."""

    def test_depth_probabilities_sum_to_one(self, tiny_rig, tiny_frustum):
        """Test that summing lifted features over depth returns the features."""
        features = _random_map((3, 2, 4), 1)
        logits = _random_map((tiny_frustum.n_depth, 2, 4), 2)
        lifted = lift(features, logits, tiny_rig.cameras[0], tiny_frustum, tiny_rig.image_size)
        per_depth = lifted.features.reshape(tiny_frustum.n_depth, 2, 4, 3)
        np.testing.assert_allclose(
            per_depth.sum(dim=0).numpy(), features.permute(1, 2, 0).numpy(), rtol=1e-12
        )

    def test_one_hot_depth_places_mass_at_bin_center(self, tiny_frustum):
        """Test that a one-hot depth puts all mass at depth d_min + (j + 0.5) d_size."""
        camera = Camera(
            intrinsics=pinhole_intrinsics((8, 16), 90.0),
            rotation=np.eye(3),
            translation=np.zeros(3),
        )
        features = torch.ones(2, 2, 4, dtype=torch.float64)
        logits = torch.full((tiny_frustum.n_depth, 2, 4), -1e4, dtype=torch.float64)
        logits[2] = 0.0
        lifted = lift(features, logits, camera, tiny_frustum, (8, 16))
        carrying = lifted.features.sum(dim=1) > 0
        depths = lifted.points[carrying, 2]
        expected = tiny_frustum.d_min + 2.5 * tiny_frustum.d_size
        assert carrying.sum() == 8
        np.testing.assert_allclose(depths.numpy(), expected)
        assert lifted.features.sum().item() == pytest.approx(16.0)

    def test_mismatched_depth_bins(self, tiny_rig, tiny_frustum):
        """Test that the logit count must equal the number of bins."""
        with pytest.raises(ConfigurationError):
            lift(
                _random_map((3, 2, 4), 1),
                _random_map((tiny_frustum.n_depth + 1, 2, 4), 2),
                tiny_rig.cameras[0],
                tiny_frustum,
                tiny_rig.image_size,
            )


class TestSplat:
    """Tests for sum-pooling into ground cells."""

    GRID = BEVGrid(4, 1.0)
    GRID_WIDE = BEVGrid(12, 1.0)

    def test_empty_point_set(self):
        """Test that no points give an all-zero grid."""
        lifted = LiftedPoints(points=torch.zeros(0, 3), features=torch.zeros(0, 5))
        pooled = splat(lifted, self.GRID)
        assert pooled.shape == (5, 4, 4)
        assert not pooled.any()

    def test_additivity(self):
        """Test that two equal points in one cell give twice the value."""
        point = torch.tensor([[0.2, 0.3, 1.0]])
        feature = torch.tensor([[1.5, -2.0]])
        single = splat(LiftedPoints(point, feature), self.GRID)
        double = splat(LiftedPoints(point.repeat(2, 1), feature.repeat(2, 1)), self.GRID)
        torch.testing.assert_close(double, 2 * single)
        assert single[0, 2, 2].item() == 1.5

    def test_half_open_cells(self):
        """Test that the lower edge is inside the grid and the upper edge outside."""
        points = torch.tensor([[-2.0, -2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        flat, valid = ground_cell_index(points, self.GRID)
        assert valid.tolist() == [True, False, False]
        assert flat[0].item() == 0

    def test_conservation(self):
        """Test that in-grid feature mass is preserved and the rest dropped."""
        generator = torch.Generator().manual_seed(5)
        points = (torch.rand(500, 3, generator=generator, dtype=torch.float64) - 0.5) * 6.0
        features = torch.rand(500, 3, generator=generator, dtype=torch.float64)
        _, valid = ground_cell_index(points, self.GRID)
        pooled = splat(LiftedPoints(points, features), self.GRID)
        assert 0 < valid.sum() < 500
        np.testing.assert_allclose(
            pooled.sum(dim=(1, 2)).numpy(), features[valid].sum(dim=0).numpy(), rtol=1e-5
        )

    @settings(max_examples=1000, deadline=None)
    @given(
        n_cameras=st.integers(1, 6),
        camera_index=st.integers(0, 5),
        fov=st.floats(40.0, 120.0),
        offset=st.tuples(*[st.floats(-3.0, 3.0)] * 3),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_conservation_of_lifted_features(self, n_cameras, camera_index, fov, offset, seed):
        """Test conservation on points lifted from random cameras."""
        rig = CameraRig.from_config(
            RigConfig(n_cameras=n_cameras, image_size=(8, 16), horizontal_fov_deg=fov)
        )
        camera = rig.cameras[camera_index % n_cameras].translated(offset)
        frustum = FrustumConfig(d_min=1.0, d_max=9.0, d_size=2.0)
        features = _random_map((3, 2, 4), seed)
        logits = _random_map((frustum.n_depth, 2, 4), seed + 1)
        lifted = lift(features, logits, camera, frustum, (8, 16))
        _, valid = ground_cell_index(lifted.points, self.GRID_WIDE)
        pooled = splat(lifted, self.GRID_WIDE)
        np.testing.assert_allclose(
            pooled.sum(dim=(1, 2)).numpy(),
            lifted.features[valid].sum(dim=0).numpy(),
            rtol=1e-5,
            atol=1e-12,
        )


class TestEquivariance:
    """Moving a camera by one cell moves its splat by one cell."""

    @pytest.mark.parametrize("camera_index", [0, 1, 2, 3])
    def test_translation_by_one_cell(self, camera_index):
        """Test that a +x shift of one cell_size shifts interior cells by one row."""
        grid = BEVGrid(16, 1.0)
        # Bin centers stay off the cell boundaries.
        frustum = FrustumConfig(d_min=1.25, d_max=9.25, d_size=2.0)
        camera = CameraRig.from_config(RigConfig(n_cameras=4, image_size=(8, 16))).cameras[
            camera_index
        ]
        features = _random_map((3, 2, 4), 10 + camera_index)
        logits = _random_map((frustum.n_depth, 2, 4), 20 + camera_index)
        base = splat(lift(features, logits, camera, frustum, (8, 16)), grid)
        moved = splat(
            lift(features, logits, camera.translated((grid.cell_size, 0.0, 0.0)), frustum, (8, 16)),
            grid,
        )
        assert base[:, :-1].abs().sum() > 0
        torch.testing.assert_close(moved[:, 1:], base[:, :-1], rtol=0.0, atol=0.0)


class TestFuseFrame:
    """Tests for multi-camera fusion."""

    def test_single_camera_equals_lift_splat(
        self, encoder, frame, tiny_rig, tiny_frustum, tiny_grid
    ):
        """Test that a one-camera rig gives that camera's splat."""
        rig = tiny_rig.subset([0])
        single = MultiCamFrame(images=frame.images[:1])
        fused = fuse_frame(single, rig, encoder, tiny_frustum, tiny_grid)
        features, logits = encode_image(torch.as_tensor(frame.images[0]), encoder)
        direct = splat(
            lift(features, logits, rig.cameras[0], tiny_frustum, rig.image_size), tiny_grid
        )
        torch.testing.assert_close(fused.features, direct)

    def test_duplicate_camera_doubles_contribution(
        self, encoder, frame, tiny_rig, tiny_frustum, tiny_grid
    ):
        """Test that listing a camera twice doubles its features."""
        once = fuse_frame(
            MultiCamFrame(images=frame.images[:1]),
            tiny_rig.subset([0]),
            encoder,
            tiny_frustum,
            tiny_grid,
        )
        twice = fuse_frame(
            MultiCamFrame(images=np.stack([frame.images[0], frame.images[0]])),
            tiny_rig.subset([0, 0]),
            encoder,
            tiny_frustum,
            tiny_grid,
        )
        torch.testing.assert_close(twice.features, 2 * once.features)

    def test_features_land_in_front_of_camera(self, encoder, frame, tiny_rig, tiny_frustum):
        """Test that the forward camera only fills cells ahead of the vehicle."""
        grid = BEVGrid(16, 1.0)
        single = MultiCamFrame(images=frame.images[:1])
        fused = fuse_frame(single, tiny_rig.subset([0]), encoder, tiny_frustum, grid)
        occupied = fused.features.abs().sum(dim=0) > 0
        rows = torch.nonzero(occupied)[:, 0]
        assert rows.numel() > 0
        assert rows.min().item() >= 8

    def test_camera_count_must_match(self, encoder, frame, tiny_rig, tiny_frustum, tiny_grid):
        """Test that a frame with the wrong number of images is rejected."""
        with pytest.raises(ConfigurationError):
            fuse_frame(frame, tiny_rig.subset([0]), encoder, tiny_frustum, tiny_grid)


class TestLiftSplatEncoder:
    """Tests for the batched encoder."""

    def test_matches_per_frame_fusion(self, frame, tiny_rig, tiny_frustum, tiny_grid):
        """Test that batched fusion equals camera-by-camera fusion."""
        torch.manual_seed(0)
        model = LiftSplatEncoder(tiny_rig, tiny_frustum, tiny_grid, channels=3, hidden=8)
        model = model.double().eval()
        images = torch.as_tensor(frame.images).unsqueeze(0)
        batched = model(images)[0]
        reference = fuse_frame(frame, tiny_rig, model.image_encoder, tiny_frustum, tiny_grid)
        torch.testing.assert_close(batched, reference.features, rtol=1e-9, atol=1e-9)

    def test_output_shape(self, tiny_rig, tiny_frustum, tiny_grid, generator):
        """Test the [B, C, H, W] output layout."""
        model = LiftSplatEncoder(tiny_rig, tiny_frustum, tiny_grid, channels=5, hidden=8).eval()
        images = torch.rand(3, tiny_rig.n_cameras, 3, *tiny_rig.image_size, generator=generator)
        assert model(images).shape == (3, 5, 16, 16)

    def test_rejects_wrong_rig(self, tiny_rig, tiny_frustum, tiny_grid):
        """Test that images must match the rig layout."""
        model = LiftSplatEncoder(tiny_rig, tiny_frustum, tiny_grid, channels=2, hidden=8)
        with pytest.raises(ConfigurationError):
            model(torch.zeros(1, tiny_rig.n_cameras + 1, 3, *tiny_rig.image_size))
