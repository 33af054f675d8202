"""Center extraction, offset grouping and flow-based tracking.

All functions work on numpy arrays of a single sequence; id 0 is background.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from modules.instances.domain.value_objects import (
    Center,
    GroupingResult,
    InstanceSequence,
    PostprocessConfig,
)
from shared.exceptions import ConfigurationError
from shared.logging import get_logger

logger = get_logger(__name__)


def extract_centers(heatmap: np.ndarray, threshold: float, nms_radius: float) -> list[Center]:
    """Find instance centers in a heatmap.

    Candidates are 3x3 local maxima scoring at least ``threshold``. They are
    visited by descending score, then row-major order, and kept unless a
    kept center lies within ``nms_radius`` (Euclidean, inclusive).

    Args:
        heatmap: [H, W] or [1, H, W] scores in [0, 1].
        threshold: Minimum score.
        nms_radius: Suppression radius in cells.

    Returns:
        Kept centers sorted by descending score.
    """
    heat = np.asarray(heatmap, dtype=np.float64)
    if heat.ndim == 3:
        heat = heat[0]
    peaks = ndimage.maximum_filter(heat, size=3, mode="constant", cval=-np.inf)
    rows, cols = np.nonzero((heat == peaks) & (heat >= threshold))
    candidates = sorted(
        (Center(int(r), int(c), float(heat[r, c])) for r, c in zip(rows, cols, strict=True)),
        key=lambda center: (-center.score, center.row, center.col),
    )
    kept: list[Center] = []
    for candidate in candidates:
        if all(
            np.hypot(candidate.row - other.row, candidate.col - other.col) > nms_radius
            for other in kept
        ):
            kept.append(candidate)
    return kept


def group_pixels(
    mask: np.ndarray, offset: np.ndarray, centers: list[Center]
) -> GroupingResult:
    """Assign each foreground cell to the center nearest its offset target.

    Cell ``c`` votes for ``c + offset(c)``; ties go to the lower center
    index. Ids are ``1..len(centers)`` in the order of ``centers``.

    Args:
        mask: [H, W] foreground mask.
        offset: [2, H, W] offsets in cells.
        centers: Centers of this frame.

    Returns:
        The instance map, and the count of foreground cells left at 0
        because there were no centers.
    """
    mask = np.asarray(mask).astype(bool)
    instance_map = np.zeros(mask.shape, dtype=np.int64)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return GroupingResult(instance_map, 0)
    if not centers:
        return GroupingResult(instance_map, int(rows.size))

    votes = np.stack([rows + offset[0, rows, cols], cols + offset[1, rows, cols]], axis=1)
    points = np.array([(c.row, c.col) for c in centers], dtype=np.float64)
    distances = np.linalg.norm(votes[:, None, :] - points[None, :, :], axis=2)
    instance_map[rows, cols] = np.argmin(distances, axis=1) + 1
    return GroupingResult(instance_map, 0)


def warp_mask(mask: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Move mask cells by the flow at each cell, rounded to the nearest cell."""
    rows, cols = np.nonzero(mask)
    target_rows = np.rint(rows + flow[0, rows, cols]).astype(np.int64)
    target_cols = np.rint(cols + flow[1, rows, cols]).astype(np.int64)
    h, w = mask.shape
    inside = (target_rows >= 0) & (target_rows < h) & (target_cols >= 0) & (target_cols < w)
    warped = np.zeros(mask.shape, dtype=bool)
    warped[target_rows[inside], target_cols[inside]] = True
    return warped


def _match_frame(
    tracked: np.ndarray,
    flow: np.ndarray,
    local: np.ndarray,
    min_iou: float,
) -> dict[int, int]:
    """Greedy warped-overlap matching of local ids to track ids."""
    local_ids = np.unique(local[local > 0])
    local_sizes = {int(i): int((local == i).sum()) for i in local_ids}
    pairs: list[tuple[float, int, int]] = []
    for track_id in np.unique(tracked[tracked > 0]):
        warped = warp_mask(tracked == track_id, flow)
        size = int(warped.sum())
        overlap = np.bincount(local[warped], minlength=int(local.max()) + 1)
        for local_id in local_ids:
            inter = int(overlap[local_id])
            if inter == 0:
                continue
            iou = inter / (size + local_sizes[int(local_id)] - inter)
            if iou >= min_iou:
                pairs.append((iou, int(track_id), int(local_id)))

    assignment: dict[int, int] = {}
    used_tracks: set[int] = set()
    for _, track_id, local_id in sorted(pairs, key=lambda p: (-p[0], p[1], p[2])):
        if track_id in used_tracks or local_id in assignment:
            continue
        assignment[local_id] = track_id
        used_tracks.add(track_id)
    return assignment


def track_instances(
    frames: np.ndarray, flows: np.ndarray, min_track_iou: float = 0.1
) -> InstanceSequence:
    """Link per-frame instance maps into tracks using the predicted flow.

    The first frame keeps its ids. Each track of frame t is warped by the
    flow at t and matched to instances of frame t+1 by descending IoU
    (ties to the lower track id). Unmatched instances start new tracks.

    Args:
        frames: [T, H, W] frame-local instance maps.
        flows: [T, 2, H, W] flow in cells.
        min_track_iou: Minimum IoU to continue a track.

    Returns:
        Track-consistent instance maps.
    """
    frames = np.asarray(frames, dtype=np.int64)
    if flows.shape[0] != frames.shape[0] or flows.shape[2:] != frames.shape[1:]:
        raise ConfigurationError("flows and instance maps are not aligned")
    tracked = np.zeros_like(frames)
    if frames.shape[0] == 0:
        return InstanceSequence(tracked)
    tracked[0] = frames[0]
    next_id = int(frames[0].max()) + 1
    for t in range(1, frames.shape[0]):
        assignment = _match_frame(tracked[t - 1], flows[t - 1], frames[t], min_track_iou)
        for local_id in np.unique(frames[t][frames[t] > 0]):
            track_id = assignment.get(int(local_id))
            if track_id is None:
                track_id = next_id
                next_id += 1
            tracked[t][frames[t] == local_id] = track_id
    return InstanceSequence(tracked)


def instances_from_modalities(
    segmentation: np.ndarray,
    center: np.ndarray,
    offset: np.ndarray,
    flow: np.ndarray,
    config: PostprocessConfig,
) -> InstanceSequence:
    """Full post-processing of one decoded sequence.

    Args:
        segmentation: [T, H, W] binary mask.
        center: [T, H, W] or [T, 1, H, W] heatmaps.
        offset: [T, 2, H, W].
        flow: [T, 2, H, W].
        config: Thresholds.
    """
    frames = []
    unassigned = 0
    for t in range(segmentation.shape[0]):
        centers = extract_centers(center[t], config.center_threshold, config.nms_radius)
        grouped = group_pixels(segmentation[t], offset[t], centers)
        frames.append(grouped.instance_map)
        unassigned += grouped.unassigned
    if unassigned:
        logger.debug("foreground_without_center", cells=unassigned)
    stacked = np.stack(frames) if frames else np.zeros((0, *segmentation.shape[1:]), np.int64)
    return track_instances(stacked, np.asarray(flow), config.min_track_iou)
