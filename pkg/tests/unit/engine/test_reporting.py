"""Unit tests for the evaluation tables and their summaries."""

import math

import pytest

from modules.engine.domain.reporting import (
    DIVERSITY_COLUMNS,
    METRIC_COLUMNS,
    REGION_NOTE,
    diversity_frame,
    metric_frame,
    setting_means,
    summarize,
)
from modules.engine.domain.services import DiversityRow, MetricRow

STEPS = {"short": 4, "mid": 8, "long": 12}


def _metric(episode, variant="stretchbev", horizon="short", region="far", score=0.5):
    return MetricRow(
        episode=episode,
        variant=variant,
        horizon=horizon,
        horizon_steps=STEPS[horizon],
        region=region,
        iou=score,
        vpq=score / 2,
        iou_mean_rollout=score,
        vpq_mean_rollout=score / 2,
    )


def _diversity(episode, ged, variant="stretchbev"):
    return DiversityRow(
        episode=episode,
        variant=variant,
        horizon="short",
        horizon_steps=4,
        region="far",
        ged=ged,
        n_samples=3,
        modes=2,
    )


class TestFrames:
    """Tests for metric_frame and diversity_frame."""

    def test_column_order(self):
        """Test that columns follow the row fields."""
        assert list(metric_frame([_metric(0)]).columns) == METRIC_COLUMNS
        assert list(diversity_frame([_diversity(0, 1.0)]).columns) == DIVERSITY_COLUMNS

    def test_row_order(self):
        """Test ordering by variant, horizon steps, region and episode."""
        rows = [
            _metric(1, horizon="long"),
            _metric(0, variant="copy-last"),
            _metric(1, horizon="mid", region="near"),
            _metric(0, horizon="mid", region="far"),
            _metric(0, horizon="short"),
        ]
        frame = metric_frame(rows)
        assert list(zip(frame["variant"], frame["horizon"], frame["region"], frame["episode"])) == [
            ("copy-last", "short", "far", 0),
            ("stretchbev", "short", "far", 0),
            ("stretchbev", "mid", "far", 0),
            ("stretchbev", "mid", "near", 1),
            ("stretchbev", "long", "far", 1),
        ]

    def test_empty_rows(self):
        """Test that no rows give an empty table with the full header."""
        frame = diversity_frame([])
        assert frame.empty
        assert list(frame.columns) == DIVERSITY_COLUMNS


class TestSettingMeans:
    """Tests for setting_means."""

    def test_mean_and_std(self):
        """Test the per-setting aggregate across episodes."""
        frame = metric_frame([_metric(0, score=0.2), _metric(1, score=0.6)])
        (row,) = setting_means(frame, "iou").itertuples(index=False)
        assert row.mean == pytest.approx(0.4)
        assert row.std == pytest.approx(math.sqrt(0.08))

    def test_single_episode_std_is_zero(self):
        """Test that one episode reports a zero spread."""
        (row,) = setting_means(metric_frame([_metric(0)]), "vpq").itertuples(index=False)
        assert row.std == 0.0


class TestSummarize:
    """Tests for summarize."""

    def test_entries_per_setting(self):
        """Test that every setting gets one entry with every score."""
        metrics = metric_frame(
            [_metric(0), _metric(1), _metric(0, region="near"), _metric(0, variant="copy-last")]
        )
        diversity = diversity_frame([_diversity(0, 10.0), _diversity(1, 30.0)])
        summary = summarize(metrics, diversity, extra={"seed": 7})

        assert summary["region_note"] == REGION_NOTE
        assert summary["episodes"] == 2
        assert summary["seed"] == 7
        labels = [(s["variant"], s["region"]) for s in summary["settings"]]
        assert labels == [("copy-last", "far"), ("stretchbev", "far"), ("stretchbev", "near")]
        far = summary["settings"][1]
        assert far["iou"] == {"mean": 0.5, "std": 0.0}
        assert far["ged"]["mean"] == pytest.approx(20.0)
        assert far["modes"]["mean"] == 2.0
        assert "ged" not in summary["settings"][2]

    def test_empty_tables(self):
        """Test the summary of an empty evaluation."""
        summary = summarize(metric_frame([]), diversity_frame([]))
        assert summary["episodes"] == 0
        assert summary["settings"] == []
