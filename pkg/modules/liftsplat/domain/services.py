"""Lift, splat and per-frame fusion.

Lifting places every feature cell of every camera at each depth bin center
in the vehicle frame, weighted by its depth probability. Splatting sums the
lifted features into the ground cells they fall in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import torch

from modules.liftsplat.domain.geometry import backproject, feature_pixel_centers
from modules.liftsplat.domain.value_objects import BEVGrid, BEVState, FrustumConfig
from shared.exceptions import ConfigurationError

if TYPE_CHECKING:
    from modules.liftsplat.domain.networks import ImageEncoder
    from modules.world.domain.entities import MultiCamFrame
    from modules.world.domain.value_objects import Camera, CameraRig


@dataclass(frozen=True, eq=False)
class LiftedPoints:
    """Weighted feature points in the vehicle frame.

    Attributes:
        points: [N, 3] vehicle-frame positions.
        features: [N, C] features already multiplied by depth probability.
    """

    points: torch.Tensor
    features: torch.Tensor


def encode_image(
    image: torch.Tensor, encoder: ImageEncoder
) -> tuple[torch.Tensor, torch.Tensor]:
    """Run the image encoder on a single [3, h, w] image.

    Returns:
        ``(features [C, h', w'], depth_logits [D, h', w'])``.
    """
    features, logits = encoder(image.unsqueeze(0))
    return features[0], logits[0]


def lift(
    features: torch.Tensor,
    depth_logits: torch.Tensor,
    camera: Camera,
    frustum: FrustumConfig,
    image_size: tuple[int, int],
) -> LiftedPoints:
    """Lift a feature map into weighted vehicle-frame points.

    Args:
        features: [C, h', w'] feature map.
        depth_logits: [D, h', w'] depth logits.
        camera: Camera the features came from.
        frustum: Depth slicing; D must equal ``frustum.n_depth``.
        image_size: (h, w) of the input image.

    Returns:
        ``D * h' * w'`` points with their weighted features.

    Raises:
        ConfigurationError: On any shape mismatch.
    """
    if features.dim() != 3 or depth_logits.dim() != 3:
        raise ConfigurationError("features and depth logits must be [C, h, w]")
    if depth_logits.shape[0] != frustum.n_depth:
        raise ConfigurationError(
            f"expected {frustum.n_depth} depth bins, got {depth_logits.shape[0]}"
        )
    if features.shape[1:] != depth_logits.shape[1:]:
        raise ConfigurationError("features and depth logits differ in spatial size")

    channels, fh, fw = features.shape
    # float64 geometry, shared with LiftSplatEncoder.
    pixels = feature_pixel_centers((fh, fw), image_size, torch.float64)
    points = backproject(pixels, frustum.bin_centers(torch.float64), camera)
    probs = depth_logits.softmax(dim=0)
    weighted = probs.unsqueeze(1) * features.unsqueeze(0)
    return LiftedPoints(
        points=points.reshape(-1, 3),
        features=weighted.permute(0, 2, 3, 1).reshape(-1, channels),
    )


def ground_cell_index(points: torch.Tensor, grid: BEVGrid) -> tuple[torch.Tensor, torch.Tensor]:
    """Return flat cell indices and an in-grid mask for vehicle-frame points.

    Cells are half-open: ``i = floor((x - x_min) / cell)``. The height
    coordinate is ignored.
    """
    i = torch.floor((points[..., 0] - grid.x_min) / grid.cell_size).long()
    j = torch.floor((points[..., 1] - grid.x_min) / grid.cell_size).long()
    n = grid.grid_cells
    valid = (i >= 0) & (i < n) & (j >= 0) & (j < n)
    return i * n + j, valid


def splat(lifted: LiftedPoints, grid: BEVGrid) -> torch.Tensor:
    """Sum-pool lifted features into ground cells.

    Points outside the grid are dropped.

    Returns:
        [C, H, W] tensor.
    """
    flat, valid = ground_cell_index(lifted.points, grid)
    channels = lifted.features.shape[1]
    n = grid.grid_cells
    pooled = lifted.features.new_zeros(channels, n * n)
    pooled.index_add_(1, flat[valid], lifted.features[valid].T)
    return pooled.reshape(channels, n, n)


def fuse_frame(
    frame: MultiCamFrame,
    rig: CameraRig,
    encoder: ImageEncoder,
    frustum: FrustumConfig,
    grid: BEVGrid,
) -> BEVState:
    """Fuse one multi-camera frame into a BEV state.

    The result is the sum over cameras of each camera's splatted features.

    Raises:
        ConfigurationError: If the frame does not match the rig.
    """
    dtype = next(encoder.parameters()).dtype
    images = torch.as_tensor(frame.images, dtype=dtype)
    if images.shape[0] != rig.n_cameras:
        raise ConfigurationError(
            f"frame has {images.shape[0]} images for a {rig.n_cameras}-camera rig"
        )
    total: torch.Tensor | None = None
    for image, camera in zip(images, rig.cameras, strict=True):
        features, logits = encode_image(image, encoder)
        pooled = splat(lift(features, logits, camera, frustum, rig.image_size), grid)
        total = pooled if total is None else total + pooled
    assert total is not None
    return BEVState(features=total, grid=grid)
