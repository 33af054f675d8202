"""Pinhole geometry between image pixels and the vehicle frame.

Pixel coordinates follow the convention that pixel ``(row, col)`` has its
center at ``(u, v) = (col + 0.5, row + 0.5)``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import torch

if TYPE_CHECKING:
    from modules.world.domain.value_objects import Camera


def camera_tensors(
    camera: Camera, dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Return ``(K, R, t)`` of ``camera`` as tensors."""
    return (
        torch.as_tensor(camera.intrinsics, dtype=dtype),
        torch.as_tensor(camera.rotation, dtype=dtype),
        torch.as_tensor(camera.translation, dtype=dtype),
    )


def feature_pixel_centers(
    feature_size: tuple[int, int],
    image_size: tuple[int, int],
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Return homogeneous input-image pixel coordinates of feature cells.

    Feature cell ``(a, b)`` of an ``h' x w'`` map over an ``h x w`` image
    sits at ``u = (b + 0.5) * w / w'`` and ``v = (a + 0.5) * h / h'``.

    Returns:
        [h', w', 3] tensor of ``(u, v, 1)``.
    """
    fh, fw = feature_size
    h, w = image_size
    v = (torch.arange(fh, dtype=dtype) + 0.5) * (h / fh)
    u = (torch.arange(fw, dtype=dtype) + 0.5) * (w / fw)
    vv, uu = torch.meshgrid(v, u, indexing="ij")
    return torch.stack([uu, vv, torch.ones_like(uu)], dim=-1)


def backproject(
    pixels: torch.Tensor, depths: torch.Tensor, camera: Camera
) -> torch.Tensor:
    """Lift homogeneous pixels to vehicle-frame points at given depths.

    ``p_cam = d * K^-1 [u, v, 1]`` followed by ``p_vehicle = R p_cam + t``.

    Args:
        pixels: [..., 3] homogeneous pixel coordinates.
        depths: [D] depths along the camera z axis.
        camera: Camera to lift through.

    Returns:
        [D, ..., 3] vehicle-frame points.
    """
    k, r, t = camera_tensors(camera, pixels.dtype)
    rays = pixels @ torch.linalg.inv(k).T
    shape = (depths.shape[0],) + (1,) * (pixels.dim() - 1) + (1,)
    points_cam = depths.to(pixels.dtype).reshape(shape) * rays.unsqueeze(0)
    return points_cam @ r.T + t


def project(points: torch.Tensor, camera: Camera) -> tuple[torch.Tensor, torch.Tensor]:
    """Project vehicle-frame points into the image.

    Args:
        points: [..., 3] vehicle-frame points.
        camera: Camera to project into.

    Returns:
        ``(uv, depth)`` with shapes [..., 2] and [...].
    """
    k, r, t = camera_tensors(camera, points.dtype)
    points_cam = (points - t) @ r
    uvw = points_cam @ k.T
    depth = points_cam[..., 2]
    return uvw[..., :2] / uvw[..., 2:3], depth
