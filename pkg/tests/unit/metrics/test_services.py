"""Unit tests for IoU, VPQ, GED and the evaluation protocol."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.metrics.domain.exceptions import HorizonUnavailableError, InsufficientSamplesError
from modules.metrics.domain.services import (
    GED_SCALE,
    apply_setting,
    component_centroids,
    count_occupancy_modes,
    ged_from_sequences,
    generalized_energy_distance,
    iou,
    vpq,
)
from modules.metrics.domain.value_objects import (
    EvalSetting,
    Horizon,
    Region,
    all_settings,
    parse_horizons,
)
from shared.exceptions import ConfigurationError


def _brute_force_vpq(pred, gt, threshold=0.5):
    """Enumerate every per-frame matching and apply id consistency in time order."""
    first_match = {}
    numerator, denominator = 0.0, 0.0
    for t in range(pred.shape[0]):
        pred_ids = sorted({int(v) for v in pred[t].ravel()} - {0})
        gt_ids = sorted({int(v) for v in gt[t].ravel()} - {0})

        def pair_iou(p, g, frame=t):
            inter = union = 0
            for a, b in zip(pred[frame].ravel(), gt[frame].ravel(), strict=True):
                inter += a == p and b == g
                union += a == p or b == g
            return inter / union

        best = []
        for choice in itertools.product([None, *gt_ids], repeat=len(pred_ids)):
            chosen = [g for g in choice if g is not None]
            if len(set(chosen)) != len(chosen):
                continue
            pairs = [(p, g) for p, g in zip(pred_ids, choice, strict=True) if g is not None]
            if all(pair_iou(p, g) > threshold for p, g in pairs) and len(pairs) > len(best):
                best = pairs
        true_positives = 0
        for p, g in best:
            if first_match.setdefault(p, g) == g:
                true_positives += 1
                numerator += pair_iou(p, g)
        denominator += (
            true_positives
            + 0.5 * (len(pred_ids) - true_positives)
            + 0.5 * (len(gt_ids) - true_positives)
        )
    return 1.0 if denominator == 0 else numerator / denominator


def _random_case(rng):
    steps, h, w = int(rng.integers(1, 5)), int(rng.integers(2, 9)), int(rng.integers(2, 9))
    gt = rng.integers(0, 4, size=(steps, h, w))
    pred = np.empty_like(gt)
    for t in range(steps):
        permutation = np.concatenate([[0], rng.permutation([1, 2, 3])])
        pred[t] = permutation[gt[t]]
    noise = rng.random(gt.shape) < rng.uniform(0.0, 0.4)
    pred[noise] = rng.integers(0, 4, size=int(noise.sum()))
    return pred, gt


class TestIoU:
    """Tests for pooled foreground IoU."""

    def test_identical(self):
        """Test that identical nonempty masks give 1."""
        mask = np.zeros((2, 4, 4))
        mask[:, 1:3, 1:3] = 1
        assert iou(mask, mask) == 1.0

    def test_disjoint(self):
        """Test that disjoint masks give 0."""
        a, b = np.zeros((1, 4, 4)), np.zeros((1, 4, 4))
        a[0, 0, :2], b[0, 3, :2] = 1, 1
        assert iou(a, b) == 0.0

    def test_prediction_with_equal_extra_area(self):
        """Test |A| / |2A| = 0.5."""
        gt, pred = np.zeros((1, 4, 4)), np.zeros((1, 4, 4))
        gt[0, :2] = 1
        pred[0] = 1
        assert iou(pred, gt) == 0.5

    def test_both_empty(self):
        """Test that two empty masks score 1."""
        assert iou(np.zeros((2, 3, 3)), np.zeros((2, 3, 3))) == 1.0

    def test_shape_mismatch(self):
        """Test that shapes must agree."""
        with pytest.raises(ConfigurationError):
            iou(np.zeros((1, 3, 3)), np.zeros((1, 3, 4)))


class TestVPQ:
    """Tests for video panoptic quality."""

    def test_identity(self):
        """Test that an exact prediction scores 1."""
        maps = np.zeros((3, 6, 6), dtype=np.int64)
        maps[:, 1:3, 1:3], maps[:, 4:6, 3:5] = 1, 2
        assert vpq(maps, maps) == 1.0

    def test_empty_prediction(self):
        """Test that missing every instance scores 0."""
        gt = np.zeros((2, 4, 4), dtype=np.int64)
        gt[:, :2, :2] = 1
        assert vpq(np.zeros_like(gt), gt) == 0.0

    def test_partial_overlap(self):
        """Test a consistent 3-of-4 overlap with one stray cell scoring 0.6."""
        gt = np.zeros((2, 4, 4), dtype=np.int64)
        gt[:, 0, :4] = 1
        pred = np.zeros_like(gt)
        pred[:, 0, :3] = 5
        pred[:, 1, 0] = 5
        assert vpq(pred, gt) == pytest.approx(0.6)

    def test_id_switch_is_penalized(self):
        """Test that a predicted id changing its ground-truth match stops counting."""
        gt = np.zeros((2, 4, 4), dtype=np.int64)
        gt[:, :2, :2], gt[:, 2:, 2:] = 1, 2
        pred = gt.copy()
        pred[1] = np.where(gt[1] == 1, 2, np.where(gt[1] == 2, 1, 0))
        # Frame 1: both pairs break consistency, 2 FP + 2 FN.
        assert vpq(pred, gt) == pytest.approx(2.0 / (2 + 1 + 1))

    def test_both_empty(self):
        """Test that two empty sequences score 1."""
        empty = np.zeros((2, 3, 3), dtype=np.int64)
        assert vpq(empty, empty) == 1.0

    def test_matches_brute_force_oracle(self):
        """Test agreement with exhaustive matching on random small sequences."""
        rng = np.random.default_rng(0)
        for _ in range(60):
            pred, gt = _random_case(rng)
            score = vpq(pred, gt)
            assert 0.0 <= score <= 1.0
            assert abs(score - _brute_force_vpq(pred, gt)) <= 1e-9


class TestGED:
    """Tests for the generalized energy distance."""

    def test_identical_samples(self):
        """Test that samples equal to the reference give 0."""
        maps = np.zeros((2, 4, 4), dtype=np.int64)
        maps[:, 1:3, 1:3] = 1
        assert ged_from_sequences([maps, maps, maps], [maps]) == 0.0

    def test_direct_formula(self):
        """Test two identical samples at distance 0.4: sqrt(2 * 0.4)."""
        distance = generalized_energy_distance(np.full((2, 1), 0.4), np.zeros((2, 2)))
        assert distance == pytest.approx(0.894427, abs=1e-6)
        assert GED_SCALE * distance == pytest.approx(89.44, abs=0.01)

    def test_reference_term_used_with_several_references(self):
        """Test that the reference self-distance enters only when m >= 2."""
        cross = np.full((2, 2), 0.5)
        pairs = np.array([[0.0, 0.2], [0.2, 0.0]])
        references = np.array([[0.0, 0.4], [0.4, 0.0]])
        expected = np.sqrt(2 * 0.5 - 0.2 - 0.4)
        assert generalized_energy_distance(cross, pairs, references) == pytest.approx(expected)

    def test_needs_two_samples(self):
        """Test that a single sample is rejected."""
        with pytest.raises(InsufficientSamplesError):
            generalized_energy_distance(np.zeros((1, 1)), np.zeros((1, 1)))

    def test_clamped_at_zero(self):
        """Test that a negative squared distance is clamped."""
        pairs = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert generalized_energy_distance(np.zeros((2, 1)), pairs) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**16), n=st.integers(2, 6))
    def test_permutation_symmetry(self, seed, n):
        """Test that reordering samples leaves the distance unchanged."""
        rng = np.random.default_rng(seed)
        cross = rng.random((n, 2))
        pairs = rng.random((n, n))
        pairs = (pairs + pairs.T) / 2
        np.fill_diagonal(pairs, 0.0)
        references = np.array([[0.0, 0.3], [0.3, 0.0]])
        order = rng.permutation(n)
        original = generalized_energy_distance(cross, pairs, references)
        permuted = generalized_energy_distance(
            cross[order], pairs[np.ix_(order, order)], references
        )
        assert permuted == pytest.approx(original, abs=1e-12)

    def test_closer_sample_decreases_distance(self):
        """Test that replacing a duplicated sample by the reference lowers GED."""
        truth = np.zeros((2, 6, 6), dtype=np.int64)
        truth[:, 1:4, 1:4] = 1
        poor = np.zeros_like(truth)
        poor[:, 1:4, 2:5] = 1
        before = ged_from_sequences([poor, poor], [truth])
        after = ged_from_sequences([poor, truth], [truth])
        assert after < before


class TestApplySetting:
    """Tests for horizon truncation and region cropping."""

    SEQUENCE = np.arange(15 * 64 * 64).reshape(15, 64, 64)

    def test_near_crop(self):
        """Test a 30 m crop of a 0.5 m grid: 60 x 60 centered cells."""
        cropped = apply_setting(self.SEQUENCE, EvalSetting(Horizon.SHORT, Region.NEAR), 0.5, 3)
        assert cropped.shape == (4, 60, 60)
        np.testing.assert_array_equal(cropped, self.SEQUENCE[3:7, 2:62, 2:62])

    def test_far_is_full_grid(self):
        """Test that the far region keeps the whole grid."""
        window = apply_setting(self.SEQUENCE, EvalSetting(Horizon.LONG, Region.FAR), 0.5, 3)
        np.testing.assert_array_equal(window, self.SEQUENCE[3:15])

    def test_short_takes_first_four_future_frames(self):
        """Test that the short horizon keeps steps k .. k + 3."""
        window = apply_setting(self.SEQUENCE, EvalSetting(Horizon.SHORT, Region.FAR), 0.5, 3)
        np.testing.assert_array_equal(window, self.SEQUENCE[3:7])

    def test_crop_limited_by_grid(self):
        """Test that a crop larger than the grid returns the grid."""
        cropped = apply_setting(self.SEQUENCE, EvalSetting(Horizon.SHORT, Region.NEAR), 1.0, 3, 100)
        assert cropped.shape == (4, 64, 64)

    def test_channel_axes_kept(self):
        """Test that leading non-spatial axes survive the crop."""
        flows = np.zeros((7, 2, 64, 64))
        cropped = apply_setting(flows, EvalSetting(Horizon.SHORT, Region.NEAR), 0.5, 3)
        assert cropped.shape == (4, 2, 60, 60)

    def test_unavailable_horizon(self):
        """Test that asking for more future frames than exist raises."""
        with pytest.raises(HorizonUnavailableError) as exc_info:
            apply_setting(self.SEQUENCE[:7], EvalSetting(Horizon.MID, Region.FAR), 0.5, 3)
        assert exc_info.value.available == 4
        assert exc_info.value.horizon == 8


class TestSettings:
    """Tests for horizons, regions and parsing."""

    def test_horizon_steps(self):
        """Test the short, mid and long future lengths."""
        assert [h.steps for h in Horizon] == [4, 8, 12]

    def test_all_settings_ordered_by_horizon(self):
        """Test the horizon-major cross product with both regions."""
        labels = [s.label for s in all_settings([Horizon.LONG, Horizon.SHORT])]
        assert labels == ["short/near", "short/far", "long/near", "long/far"]
        assert len(all_settings()) == 6

    def test_parse_horizons(self):
        """Test comma-separated parsing."""
        assert parse_horizons("short, long") == [Horizon.SHORT, Horizon.LONG]
        with pytest.raises(ConfigurationError):
            parse_horizons("short,forever")


class TestOccupancyModes:
    """Tests for counting distinct sampled layouts."""

    @staticmethod
    def _blob(row, col):
        mask = np.zeros((16, 16), dtype=bool)
        mask[row : row + 2, col : col + 2] = True
        return mask

    def test_centroids(self):
        """Test 8-connected component centroids."""
        centroids = component_centroids(self._blob(2, 4) | self._blob(10, 10))
        np.testing.assert_allclose(centroids, [[2.5, 4.5], [10.5, 10.5]])
        assert component_centroids(np.zeros((4, 4))).shape == (0, 2)

    def test_counts(self):
        """Test that nearby layouts merge and distant or differently sized ones do not."""
        masks = [
            self._blob(2, 2),
            self._blob(3, 2),
            self._blob(12, 12),
            self._blob(2, 2) | self._blob(12, 12),
        ]
        assert count_occupancy_modes(masks) == 3
        assert count_occupancy_modes([np.zeros((4, 4)), np.zeros((4, 4))]) == 1
