"""Image encoder and the batched lift-splat encoder."""

from __future__ import annotations

from typing import TYPE_CHECKING

import torch
from torch import nn

from modules.liftsplat.domain.geometry import backproject, feature_pixel_centers
from modules.liftsplat.domain.services import ground_cell_index
from shared.exceptions import ConfigurationError
from shared.layers import conv_block

if TYPE_CHECKING:
    from modules.liftsplat.domain.value_objects import BEVGrid, FrustumConfig
    from modules.world.domain.value_objects import CameraRig

DOWNSAMPLE = 4


class ImageEncoder(nn.Module):
    """Per-camera encoder producing features and depth logits at 1/4 scale.

    Args:
        out_channels: Feature channels C.
        n_depth: Number of depth bins D.
        hidden: Width of the convolution trunk.
        zero_init_head: Zero the final 1x1 layer so depth starts uniform.
    """

    def __init__(
        self,
        out_channels: int,
        n_depth: int,
        hidden: int = 32,
        zero_init_head: bool = False,
    ) -> None:
        super().__init__()
        self.out_channels = out_channels
        self.n_depth = n_depth
        self.trunk = nn.Sequential(
            conv_block(3, hidden // 2, stride=2),
            conv_block(hidden // 2, hidden),
            conv_block(hidden, hidden, stride=2),
            conv_block(hidden, hidden),
        )
        self.head = nn.Conv2d(hidden, out_channels + n_depth, 1)
        if zero_init_head:
            nn.init.zeros_(self.head.weight)
            nn.init.zeros_(self.head.bias)

    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if images.dim() != 4 or images.shape[1] != 3:
            raise ConfigurationError(f"expected [B, 3, h, w] images, got {list(images.shape)}")
        if images.shape[2] % DOWNSAMPLE or images.shape[3] % DOWNSAMPLE:
            raise ConfigurationError(f"image sides must be multiples of {DOWNSAMPLE}")
        out = self.head(self.trunk(images))
        return out[:, : self.out_channels], out[:, self.out_channels :]


class LiftSplatEncoder(nn.Module):
    """Batched multi-camera fusion into BEV features.

    The ground cell of every (camera, depth, feature cell) triple is fixed by
    the rig, so it is computed once and kept as a buffer.

    Args:
        rig: Camera rig.
        frustum: Depth slicing.
        grid: Target BEV grid.
        channels: Feature channels C.
        hidden: Image encoder trunk width.
        zero_init_head: Forwarded to the image encoder.
    """

    def __init__(
        self,
        rig: CameraRig,
        frustum: FrustumConfig,
        grid: BEVGrid,
        channels: int,
        hidden: int = 32,
        zero_init_head: bool = False,
    ) -> None:
        super().__init__()
        self.rig = rig
        self.grid = grid
        self.channels = channels
        self.image_encoder = ImageEncoder(channels, frustum.n_depth, hidden, zero_init_head)

        h, w = rig.image_size
        pixels = feature_pixel_centers((h // DOWNSAMPLE, w // DOWNSAMPLE), (h, w), torch.float64)
        depths = frustum.bin_centers(torch.float64)
        flat, valid = zip(
            *(ground_cell_index(backproject(pixels, depths, cam), grid) for cam in rig.cameras),
            strict=True,
        )
        valid_mask = torch.stack(valid).reshape(-1)
        self.register_buffer("_cell_index", torch.stack(flat).reshape(-1)[valid_mask])
        self.register_buffer("_valid", valid_mask)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """Fuse images of shape [B, N, 3, h, w] into [B, C, H, W]."""
        batch, n_cam = images.shape[:2]
        if n_cam != self.rig.n_cameras or tuple(images.shape[3:]) != self.rig.image_size:
            raise ConfigurationError(
                f"images {list(images.shape)} do not match the camera rig"
            )
        features, logits = self.image_encoder(images.flatten(0, 1))
        probs = logits.softmax(dim=1)
        # [B*N, D, C, h', w'] -> [B, C, N*D*h'*w']
        weighted = probs.unsqueeze(2) * features.unsqueeze(1)
        weighted = weighted.reshape(batch, n_cam, *weighted.shape[1:])
        weighted = weighted.permute(0, 3, 1, 2, 4, 5).reshape(batch, self.channels, -1)
        n = self.grid.grid_cells
        pooled = weighted.new_zeros(batch, self.channels, n * n)
        pooled.index_add_(2, self._cell_index, weighted[:, :, self._valid])
        return pooled.reshape(batch, self.channels, n, n)
