"""Value objects for the world module.

Value objects are immutable and compared by their attributes, not identity.
They validate themselves on construction and raise ``ConfigurationError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from shared.exceptions import ConfigurationError


@dataclass(frozen=True)
class WorldConfig:
    """Parameters of the synthetic driving world.

    The ego vehicle is stationary at the grid center; the grid spans
    ``[-extent/2, extent/2)`` meters along both vehicle axes.

    Attributes:
        grid_cells: Cells per side of the BEV grid (H = W).
        cell_size: Meters per cell.
        n_agents: Inclusive (min, max) number of agents per episode.
        agent_size: Agent footprint (length, width) in meters.
        agent_height: Box height used for rendering, in meters.
        speed_range: (min, max) speed in meters per step.
        p_turn: Per-step probability that an idle agent starts a turn.
        p_speed_change: Per-step probability that an agent resamples its speed.
        turn_rate: Heading change per step during a turn, in radians.
        turn_duration: Steps a turn maneuver lasts.
        episode_len: Episode length T in steps.
        conditioning_len: Observed steps k before prediction starts.
        seed: Episode seed.
        respawn_margin: Meters beyond the grid edge before an agent respawns.
        placement_gap: Minimum gap between agents' bounding circles, meters.
        max_placement_retries: Attempts per agent before placement fails.
        fork_step: Step at which every idle agent turns left or right with
            probability one half each; ``None`` disables the fork.
    """

    grid_cells: int = 64
    cell_size: float = 0.5
    n_agents: tuple[int, int] = (2, 5)
    agent_size: tuple[float, float] = (4.0, 2.0)
    agent_height: float = 1.5
    speed_range: tuple[float, float] = (0.25, 1.0)
    p_turn: float = 0.1
    p_speed_change: float = 0.1
    turn_rate: float = math.pi / 24
    turn_duration: int = 8
    episode_len: int = 15
    conditioning_len: int = 3
    seed: int = 0
    respawn_margin: float = 2.0
    placement_gap: float = 1.0
    max_placement_retries: int = 200
    fork_step: int | None = None

    def __post_init__(self) -> None:
        """Validate world parameters."""
        if self.grid_cells <= 0:
            raise ConfigurationError("grid_cells must be > 0", field="grid_cells")
        if self.cell_size <= 0:
            raise ConfigurationError("cell_size must be > 0", field="cell_size")
        lo, hi = self.n_agents
        if lo < 0 or hi < lo:
            raise ConfigurationError(
                f"invalid n_agents range: {self.n_agents}", field="n_agents"
            )
        if min(self.agent_size) <= 0 or self.agent_height <= 0:
            raise ConfigurationError("agent dimensions must be > 0", field="agent_size")
        s_lo, s_hi = self.speed_range
        if s_lo < 0 or s_hi < s_lo:
            raise ConfigurationError(
                f"invalid speed_range: {self.speed_range}", field="speed_range"
            )
        for name in ("p_turn", "p_speed_change"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]", field=name)
        if self.turn_duration < 1:
            raise ConfigurationError("turn_duration must be >= 1", field="turn_duration")
        if self.conditioning_len < 1:
            raise ConfigurationError(
                "conditioning_len must be >= 1", field="conditioning_len"
            )
        if self.episode_len <= self.conditioning_len:
            raise ConfigurationError(
                "episode_len must exceed conditioning_len", field="episode_len"
            )
        if self.respawn_margin < 0 or self.placement_gap < 0:
            raise ConfigurationError("margins must be >= 0", field="respawn_margin")
        if self.max_placement_retries < 1:
            raise ConfigurationError(
                "max_placement_retries must be >= 1", field="max_placement_retries"
            )

    @property
    def extent(self) -> float:
        """Side length of the grid in meters."""
        return self.grid_cells * self.cell_size

    @property
    def half_extent(self) -> float:
        """Distance from the ego vehicle to the grid edge in meters."""
        return self.extent / 2.0

    @property
    def future_len(self) -> int:
        """Number of steps after the conditioning window."""
        return self.episode_len - self.conditioning_len


@dataclass(frozen=True)
class RigConfig:
    """Surround-view rig description used to build a ``CameraRig``.

    Attributes:
        n_cameras: Cameras spaced at equal yaw increments starting forward.
        image_size: (height, width) in pixels.
        mount_height: Camera height above the ground plane, meters.
        horizontal_fov_deg: Horizontal field of view per camera, degrees.
    """

    n_cameras: int = 4
    image_size: tuple[int, int] = (32, 64)
    mount_height: float = 1.5
    horizontal_fov_deg: float = 90.0

    def __post_init__(self) -> None:
        """Validate rig parameters."""
        if self.n_cameras < 1:
            raise ConfigurationError("n_cameras must be >= 1", field="n_cameras")
        h, w = self.image_size
        if h <= 0 or w <= 0 or h % 4 or w % 4:
            raise ConfigurationError(
                f"image_size must be positive multiples of 4, got {self.image_size}",
                field="image_size",
            )
        if not 0.0 < self.horizontal_fov_deg < 180.0:
            raise ConfigurationError(
                "horizontal_fov_deg must lie in (0, 180)", field="horizontal_fov_deg"
            )


@dataclass(frozen=True, eq=False)
class Camera:
    """Pinhole camera with extrinsics relative to the vehicle frame.

    Camera axes follow the x-right, y-down, z-forward convention; the
    vehicle frame is x-forward, y-left, z-up.

    Attributes:
        intrinsics: 3x3 pixel projection matrix K.
        rotation: 3x3 camera-to-vehicle rotation R.
        translation: Camera center in the vehicle frame, meters.
    """

    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        """Validate shapes, invertibility and orthonormality."""
        k = np.asarray(self.intrinsics, dtype=np.float64)
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if k.shape != (3, 3) or r.shape != (3, 3) or t.shape != (3,):
            raise ConfigurationError("camera matrices must be 3x3, 3x3 and 3")
        if abs(np.linalg.det(k)) < 1e-12:
            raise ConfigurationError("camera intrinsics are not invertible")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9:
            raise ConfigurationError("camera rotation is not orthonormal")
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def translated(self, offset: tuple[float, float, float]) -> Camera:
        """Return a copy of this camera moved by ``offset`` in the vehicle frame."""
        return Camera(
            intrinsics=self.intrinsics,
            rotation=self.rotation,
            translation=self.translation + np.asarray(offset, dtype=np.float64),
        )


# Columns are the camera x (right), y (down), z (forward) axes in the
# vehicle frame of a camera looking along vehicle +x.
_FORWARD_CAMERA_AXES = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


def yaw_rotation(yaw: float) -> np.ndarray:
    """Return the rotation about vehicle z by ``yaw`` radians."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pinhole_intrinsics(image_size: tuple[int, int], horizontal_fov_deg: float) -> np.ndarray:
    """Return K for square pixels with the principal point at the image center."""
    h, w = image_size
    focal = (w / 2.0) / math.tan(math.radians(horizontal_fov_deg) / 2.0)
    return np.array([[focal, 0.0, w / 2.0], [0.0, focal, h / 2.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class CameraRig:
    """A set of cameras sharing one image size.

    Attributes:
        cameras: Cameras of the rig.
        image_size: (height, width) in pixels.
    """

    cameras: tuple[Camera, ...]
    image_size: tuple[int, int]
    yaws: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.cameras:
            raise ConfigurationError("camera rig needs at least one camera")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @classmethod
    def from_config(cls, config: RigConfig) -> CameraRig:
        """Build a surround rig with cameras at equal yaw increments.

        Args:
            config: Rig description.

        Returns:
            Camera rig whose first camera looks along vehicle +x.
        """
        intrinsics = pinhole_intrinsics(config.image_size, config.horizontal_fov_deg)
        yaws = tuple(2.0 * math.pi * i / config.n_cameras for i in range(config.n_cameras))
        cameras = tuple(
            Camera(
                intrinsics=intrinsics,
                rotation=yaw_rotation(yaw) @ _FORWARD_CAMERA_AXES,
                translation=np.array([0.0, 0.0, config.mount_height]),
            )
            for yaw in yaws
        )
        return cls(cameras=cameras, image_size=config.image_size, yaws=yaws)

    def subset(self, indices: list[int]) -> CameraRig:
        """Return a rig made of the cameras at ``indices`` (repeats allowed)."""
        return CameraRig(
            cameras=tuple(self.cameras[i] for i in indices),
            image_size=self.image_size,
        )
