"""IoU, video panoptic quality, generalized energy distance and the
evaluation protocol helpers.

Inputs are numpy arrays laid out [T, H, W]; instance id 0 is background.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from modules.metrics.domain.exceptions import HorizonUnavailableError, InsufficientSamplesError
from modules.metrics.domain.value_objects import NEAR_EXTENT_METERS, EvalSetting, Region
from shared.exceptions import ConfigurationError

GED_SCALE = 100.0
VPQ_IOU_THRESHOLD = 0.5


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Foreground IoU pooled over all frames; 1.0 when both are empty."""
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise ConfigurationError(f"IoU inputs differ in shape: {pred.shape} vs {gt.shape}")
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, gt).sum() / union)


def _frame_ious(pred: np.ndarray, gt: np.ndarray) -> tuple[list[int], list[int], np.ndarray]:
    """Ids present in each map and their pairwise IoU matrix."""
    pred_ids = [int(i) for i in np.unique(pred) if i > 0]
    gt_ids = [int(i) for i in np.unique(gt) if i > 0]
    matrix = np.zeros((len(pred_ids), len(gt_ids)))
    if not pred_ids or not gt_ids:
        return pred_ids, gt_ids, matrix
    pred_area = {i: int((pred == i).sum()) for i in pred_ids}
    gt_area = {j: int((gt == j).sum()) for j in gt_ids}
    for a, i in enumerate(pred_ids):
        overlap = gt[pred == i]
        for b, j in enumerate(gt_ids):
            inter = int((overlap == j).sum())
            if inter:
                matrix[a, b] = inter / (pred_area[i] + gt_area[j] - inter)
    return pred_ids, gt_ids, matrix


def vpq(pred: np.ndarray, gt: np.ndarray, iou_threshold: float = VPQ_IOU_THRESHOLD) -> float:
    """Video panoptic quality of a predicted instance sequence.

    A predicted instance matches a ground-truth instance in a frame when
    their IoU exceeds ``iou_threshold`` and the pair agrees with the
    ground-truth id that predicted id was first matched to. The score is
    ``sum(IoU of TP) / sum(TP + FP/2 + FN/2)`` over all frames.

    Returns:
        VPQ in [0, 1]; 1.0 when both sequences are empty.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ConfigurationError(f"VPQ inputs differ in shape: {pred.shape} vs {gt.shape}")

    first_match: dict[int, int] = {}
    matched_iou = 0.0
    denominator = 0.0
    for t in range(pred.shape[0]):
        pred_ids, gt_ids, matrix = _frame_ious(pred[t], gt[t])
        true_positives = 0
        for a, b in zip(*np.nonzero(matrix > iou_threshold), strict=True):
            pred_id, gt_id = pred_ids[a], gt_ids[b]
            if first_match.setdefault(pred_id, gt_id) != gt_id:
                continue
            true_positives += 1
            matched_iou += float(matrix[a, b])
        false_positives = len(pred_ids) - true_positives
        false_negatives = len(gt_ids) - true_positives
        denominator += true_positives + 0.5 * false_positives + 0.5 * false_negatives

    if denominator == 0:
        return 1.0
    return matched_iou / denominator


def generalized_energy_distance(
    cross: np.ndarray,
    sample_pairs: np.ndarray,
    reference_pairs: np.ndarray | None = None,
) -> float:
    """Generalized energy distance from precomputed pairwise distances.

    ``D^2 = 2 E[d(S, Y)] - E[d(S, S')] - E[d(Y, Y')]`` where the self terms
    average over distinct pairs only. The result is ``sqrt(max(D^2, 0))``.

    Args:
        cross: [n, m] sample-to-reference distances.
        sample_pairs: [n, n] sample-to-sample distances.
        reference_pairs: [m, m] reference distances; ignored when m == 1.

    Raises:
        InsufficientSamplesError: If n < 2.
    """
    cross = np.asarray(cross, dtype=np.float64)
    n, m = cross.shape
    if n < 2:
        raise InsufficientSamplesError(n)

    def off_diagonal_mean(matrix: np.ndarray) -> float:
        size = matrix.shape[0]
        return float((matrix.sum() - np.trace(matrix)) / (size * (size - 1)))

    squared = 2.0 * float(cross.mean()) - off_diagonal_mean(np.asarray(sample_pairs, np.float64))
    if m >= 2 and reference_pairs is not None:
        squared -= off_diagonal_mean(np.asarray(reference_pairs, np.float64))
    return float(np.sqrt(max(squared, 0.0)))


def vpq_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - vpq(a, b)


def ged_from_sequences(samples: Sequence[np.ndarray], references: Sequence[np.ndarray]) -> float:
    """GED over instance sequences with ``1 - VPQ`` as the distance.

    The sample is the prediction and the reference the ground truth when
    scoring a pair, so the asymmetric id-consistency rule is keyed on the
    prediction.
    """
    n, m = len(samples), len(references)
    cross = np.array([[vpq_distance(s, r) for r in references] for s in samples]).reshape(n, m)
    sample_pairs = np.array(
        [
            [0.0 if i == j else vpq_distance(samples[i], samples[j]) for j in range(n)]
            for i in range(n)
        ]
    )
    reference_pairs = None
    if m >= 2:
        reference_pairs = np.array(
            [
                [0.0 if i == j else vpq_distance(references[i], references[j]) for j in range(m)]
                for i in range(m)
            ]
        )
    return generalized_energy_distance(cross, sample_pairs, reference_pairs)


def apply_setting(
    sequence: np.ndarray,
    setting: EvalSetting,
    cell_size: float,
    conditioning_len: int = 0,
    near_extent: float = NEAR_EXTENT_METERS,
) -> np.ndarray:
    """Restrict a [T, ..., H, W] sequence to an evaluation setting.

    Keeps the first ``setting.horizon.steps`` frames after the conditioning
    frames; the near region is a centered crop of ``ceil(near_extent /
    cell_size)`` cells per side, the far region the full grid.

    Raises:
        HorizonUnavailableError: If too few future frames exist.
    """
    steps = setting.horizon.steps
    available = sequence.shape[0] - conditioning_len
    if steps > available:
        raise HorizonUnavailableError(steps, available)
    window = sequence[conditioning_len : conditioning_len + steps]
    if setting.region is Region.FAR:
        return window
    h, w = window.shape[-2:]
    side = min(int(np.ceil(near_extent / cell_size - 1e-9)), h, w)
    top, left = (h - side) // 2, (w - side) // 2
    return window[..., top : top + side, left : left + side]


def component_centroids(mask: np.ndarray) -> np.ndarray:
    """Centroids [n, 2] of the 8-connected components of a binary mask."""
    labels, count = ndimage.label(np.asarray(mask).astype(bool), structure=np.ones((3, 3)))
    if count == 0:
        return np.zeros((0, 2))
    return np.array(ndimage.center_of_mass(labels > 0, labels, range(1, count + 1)))


def _same_mode(a: np.ndarray, b: np.ndarray, tolerance: float) -> bool:
    if a.shape != b.shape:
        return False
    if a.shape[0] == 0:
        return True
    distances = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(distances)
    return bool(np.all(distances[rows, cols] <= tolerance))


def count_occupancy_modes(final_masks: Sequence[np.ndarray], tolerance: float = 3.0) -> int:
    """Number of distinct occupancy layouts among sampled final frames.

    Two samples share a mode when they have the same number of connected
    components and the components pair up with centroids within
    ``tolerance`` cells.
    """
    representatives: list[np.ndarray] = []
    for mask in final_masks:
        centroids = component_centroids(mask)
        if not any(_same_mode(centroids, rep, tolerance) for rep in representatives):
            representatives.append(centroids)
    return len(representatives)
