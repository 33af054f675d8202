"""BEV label rasterization.

Agents are drawn as oriented rectangles by testing every cell center. The
rectangle is centered on the cell corner nearest to the agent, so an agent
moving without turning keeps the same footprint shifted by whole cells.
Where footprints overlap, the lower agent id owns the cell.
"""

from __future__ import annotations

import numpy as np

from modules.world.domain.entities import Agent, LabelFrame, WorldState
from modules.world.domain.value_objects import WorldConfig

CENTER_SIGMA_CELLS = 1.5


def cell_center_coordinates(config: WorldConfig) -> np.ndarray:
    """Return the metric coordinate of each cell center along one axis."""
    return -config.half_extent + (np.arange(config.grid_cells) + 0.5) * config.cell_size


def snapped_position(agent: Agent, config: WorldConfig) -> tuple[float, float]:
    """Return the cell corner nearest to the agent's position, in meters."""
    x, y = (
        -config.half_extent
        + np.rint((p + config.half_extent) / config.cell_size) * config.cell_size
        for p in agent.position
    )
    return float(x), float(y)


def agent_footprint(agent: Agent, config: WorldConfig) -> np.ndarray:
    """Return the [H, W] mask of cells whose center lies inside the agent."""
    centers = cell_center_coordinates(config)
    xs, ys = np.meshgrid(centers, centers, indexing="ij")
    x0, y0 = snapped_position(agent, config)
    dx = xs - x0
    dy = ys - y0
    c, s = np.cos(agent.heading), np.sin(agent.heading)
    along = c * dx + s * dy
    across = -s * dx + c * dy
    length, width = agent.size
    return (np.abs(along) <= length / 2.0) & (np.abs(across) <= width / 2.0)


def rasterize_instances(state: WorldState, config: WorldConfig) -> np.ndarray:
    """Return the [H, W] int32 instance map of ``state``."""
    instance_map = np.zeros((config.grid_cells, config.grid_cells), dtype=np.int32)
    # Highest id first so lower ids overwrite shared cells.
    for agent in sorted(state.agents, key=lambda a: a.id, reverse=True):
        instance_map[agent_footprint(agent, config)] = agent.id
    return instance_map


def instance_centroids(instance_map: np.ndarray) -> dict[int, tuple[float, float]]:
    """Return the mean (row, col) cell index of every instance."""
    rows, cols = np.nonzero(instance_map)
    ids = instance_map[rows, cols]
    return {
        int(i): (float(rows[ids == i].mean()), float(cols[ids == i].mean()))
        for i in np.unique(ids)
    }


def rasterize_labels(
    state_t: WorldState,
    state_t1: WorldState | None,
    config: WorldConfig,
) -> LabelFrame:
    """Rasterize the labels of one step.

    Flow is the displacement of each instance's rasterized centroid from
    t to t+1. Instances absent at t+1 (left the grid, respawned under a new
    id, or fully occluded) get zero flow.

    Args:
        state_t: World at step t.
        state_t1: World at step t+1, or ``None`` at the last step (zero flow).
        config: World configuration.

    Returns:
        Labels with segmentation, centerness, centroid offsets and flow.
    """
    size = config.grid_cells
    instance_map = rasterize_instances(state_t, config)
    segmentation = (instance_map > 0).astype(np.float32)
    center = np.zeros((size, size), dtype=np.float64)
    offsets = np.zeros((2, size, size), dtype=np.float32)
    flows = np.zeros((2, size, size), dtype=np.float32)
    rows, cols = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")

    following = (
        instance_centroids(rasterize_instances(state_t1, config)) if state_t1 is not None else {}
    )

    for agent_id, (center_row, center_col) in instance_centroids(instance_map).items():
        mask = instance_map == agent_id

        bump = np.exp(
            -((rows - center_row) ** 2 + (cols - center_col) ** 2)
            / (2.0 * CENTER_SIGMA_CELLS**2)
        )
        np.maximum(center, bump, out=center)

        offsets[0][mask] = center_row - rows[mask]
        offsets[1][mask] = center_col - cols[mask]

        if agent_id in following:
            next_row, next_col = following[agent_id]
            flows[0][mask] = next_row - center_row
            flows[1][mask] = next_col - center_col

    return LabelFrame(
        instance_map=instance_map,
        segmentation=segmentation,
        center_heatmap=center.astype(np.float32),
        offsets=offsets,
        flows=flows,
    )
