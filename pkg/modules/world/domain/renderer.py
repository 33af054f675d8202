"""Camera rendering of the synthetic world.

Agents are drawn as solid screen-space boxes spanning the projection of
their 3D bounding box. Farther agents are painted first; ties are painted
in descending id so the lower id ends up on top.
"""

from __future__ import annotations

import numpy as np

from modules.world.domain.entities import Agent, MultiCamFrame, WorldState
from modules.world.domain.value_objects import Camera, CameraRig

GROUND_COLOR = np.array([0.30, 0.30, 0.30], dtype=np.float32)
SKY_COLOR = np.array([0.55, 0.70, 0.90], dtype=np.float32)
NEAR_PLANE = 0.1


def agent_color(agent_id: int) -> np.ndarray:
    """Return a deterministic RGB color in [0.35, 1] keyed to an agent id."""
    hashed = (agent_id * 2654435761) & 0xFFFFFF
    channels = np.array(
        [(hashed >> 16) & 0xFF, (hashed >> 8) & 0xFF, hashed & 0xFF], dtype=np.float32
    )
    return 0.35 + 0.65 * channels / 255.0


def box_corners(agent: Agent, height: float) -> np.ndarray:
    """Return the 8 corners [8, 3] of an agent's box in the vehicle frame."""
    length, width = agent.size
    c, s = np.cos(agent.heading), np.sin(agent.heading)
    local = np.array(
        [[sx * length / 2.0, sy * width / 2.0] for sx in (-1, 1) for sy in (-1, 1)]
    )
    rotated = local @ np.array([[c, s], [-s, c]])
    ground = rotated + np.asarray(agent.position)
    bottom = np.column_stack([ground, np.zeros(4)])
    top = np.column_stack([ground, np.full(4, height)])
    return np.vstack([bottom, top])


def to_camera(points: np.ndarray, camera: Camera) -> np.ndarray:
    """Transform vehicle-frame points [N, 3] into camera coordinates."""
    return (points - camera.translation) @ camera.rotation


def render_background(camera: Camera, image_size: tuple[int, int]) -> np.ndarray:
    """Return the [3, h, w] ground/sky image of an empty world."""
    h, w = image_size
    us, vs = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    pixels = np.stack([us, vs, np.ones_like(us)], axis=-1).reshape(-1, 3)
    rays = pixels @ np.linalg.inv(camera.intrinsics).T @ camera.rotation.T
    ground = (rays[:, 2] < 0.0).reshape(h, w)
    image = np.where(ground[None], GROUND_COLOR[:, None, None], SKY_COLOR[:, None, None])
    return image.astype(np.float32)


def _draw_agent(
    image: np.ndarray, corners_cam: np.ndarray, camera: Camera, color: np.ndarray
) -> None:
    h, w = image.shape[1:]
    projected = corners_cam @ camera.intrinsics.T
    u = projected[:, 0] / projected[:, 2]
    v = projected[:, 1] / projected[:, 2]
    # Pixels whose center lies inside the projected bounding rectangle.
    col_lo = max(int(np.ceil(u.min() - 0.5)), 0)
    col_hi = min(int(np.floor(u.max() - 0.5)), w - 1)
    row_lo = max(int(np.ceil(v.min() - 0.5)), 0)
    row_hi = min(int(np.floor(v.max() - 0.5)), h - 1)
    if col_lo > col_hi or row_lo > row_hi:
        return
    image[:, row_lo : row_hi + 1, col_lo : col_hi + 1] = color[:, None, None]


def render_camera(
    state: WorldState,
    camera: Camera,
    image_size: tuple[int, int],
    agent_height: float = 1.5,
) -> np.ndarray:
    """Render one camera image [3, h, w] of ``state``."""
    image = render_background(camera, image_size)
    visible: list[tuple[float, int, np.ndarray]] = []
    for agent in state.agents:
        corners_cam = to_camera(box_corners(agent, agent_height), camera)
        if np.any(corners_cam[:, 2] <= NEAR_PLANE):
            continue
        visible.append((float(corners_cam[:, 2].mean()), agent.id, corners_cam))

    for _, agent_id, corners_cam in sorted(visible, key=lambda v: (-v[0], -v[1])):
        _draw_agent(image, corners_cam, camera, agent_color(agent_id))
    return image


def render_cameras(
    state: WorldState, rig: CameraRig, agent_height: float = 1.5
) -> MultiCamFrame:
    """Render every camera of ``rig``.

    Args:
        state: World snapshot.
        rig: Camera rig.
        agent_height: Box height of every agent, meters.

    Returns:
        Frame with images [n_cam, 3, h, w] in [0, 1].
    """
    images = np.stack(
        [render_camera(state, camera, rig.image_size, agent_height) for camera in rig.cameras]
    )
    return MultiCamFrame(images=images)
