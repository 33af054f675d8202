"""Value objects for the liftsplat module."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from shared.exceptions import ConfigurationError


@dataclass(frozen=True)
class FrustumConfig:
    """Depth slicing of the camera frustum.

    Attributes:
        d_min: Nearest depth considered, meters.
        d_max: Farthest depth considered, meters.
        d_size: Thickness of each depth slice, meters.
    """

    d_min: float = 2.0
    d_max: float = 20.0
    d_size: float = 1.0

    def __post_init__(self) -> None:
        """Validate the slicing."""
        if self.d_min <= 0 or self.d_min >= self.d_max:
            raise ConfigurationError("need 0 < d_min < d_max", field="d_min")
        if self.d_size <= 0:
            raise ConfigurationError("d_size must be > 0", field="d_size")
        bins = (self.d_max - self.d_min) / self.d_size
        if abs(bins - round(bins)) > 1e-6:
            raise ConfigurationError(
                "(d_max - d_min) / d_size must be an integer", field="d_size"
            )

    @property
    def n_depth(self) -> int:
        """Number of depth bins."""
        return round((self.d_max - self.d_min) / self.d_size)

    def bin_centers(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        """Return the sample depth of every bin (bin centers), shape [n_depth]."""
        index = torch.arange(self.n_depth, dtype=dtype)
        return self.d_min + (index + 0.5) * self.d_size


@dataclass(frozen=True)
class BEVGrid:
    """Ground-plane grid centered on the ego vehicle.

    Cell ``(i, j)`` covers ``x in [x_min + i*cell, x_min + (i+1)*cell)`` and
    the same half-open interval along y.

    Attributes:
        grid_cells: Cells per side (H = W).
        cell_size: Meters per cell.
    """

    grid_cells: int
    cell_size: float

    def __post_init__(self) -> None:
        if self.grid_cells <= 0 or self.cell_size <= 0:
            raise ConfigurationError("grid_cells and cell_size must be > 0")

    @property
    def extent(self) -> float:
        return self.grid_cells * self.cell_size

    @property
    def x_min(self) -> float:
        return -self.extent / 2.0

    def crop_cells(self, side_meters: float) -> int:
        """Return the cells per side of a centered crop of ``side_meters``."""
        return min(math.ceil(side_meters / self.cell_size - 1e-9), self.grid_cells)


@dataclass(frozen=True, eq=False)
class BEVState:
    """A BEV feature grid ``s_t``.

    Attributes:
        features: [C, H, W] real tensor.
        grid: Grid the features live on.
    """

    features: torch.Tensor
    grid: BEVGrid

    def __post_init__(self) -> None:
        """Validate layout and finiteness."""
        validate_bev_shape(tuple(self.features.shape), self.grid)
        if not torch.isfinite(self.features).all():
            raise ConfigurationError("BEV state holds non-finite values")

    @property
    def channels(self) -> int:
        return int(self.features.shape[0])


def validate_bev_shape(shape: tuple[int, ...], grid: BEVGrid) -> None:
    """Check that ``shape`` is a [C, H, W] layout matching ``grid``.

    Raises:
        ConfigurationError: On any mismatch.
    """
    if len(shape) != 3 or shape[0] < 1:
        raise ConfigurationError(f"BEV features must be [C, H, W], got {list(shape)}")
    if shape[1] != grid.grid_cells or shape[2] != grid.grid_cells:
        raise ConfigurationError(
            f"BEV features {list(shape)} do not match a {grid.grid_cells}-cell grid"
        )
