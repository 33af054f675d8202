"""Tabulation of evaluation rows and their per-setting summaries."""

from __future__ import annotations

from dataclasses import asdict, fields
from typing import Any

import pandas as pd

from modules.engine.domain.services import DiversityRow, MetricRow

GROUP_KEYS = ["variant", "horizon", "horizon_steps", "region"]
METRIC_COLUMNS = [f.name for f in fields(MetricRow)]
DIVERSITY_COLUMNS = [f.name for f in fields(DiversityRow)]
REGION_NOTE = (
    "near = centered crop of the shared grid without resampling; "
    "far = full grid"
)


def metric_frame(rows: list[MetricRow]) -> pd.DataFrame:
    """Rows ordered by variant, horizon (short to long), region, episode."""
    frame = pd.DataFrame([asdict(r) for r in rows], columns=METRIC_COLUMNS)
    return frame.sort_values(
        ["variant", "horizon_steps", "region", "episode"], kind="mergesort"
    ).reset_index(drop=True)


def diversity_frame(rows: list[DiversityRow]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in rows], columns=DIVERSITY_COLUMNS)
    return frame.sort_values(
        ["variant", "horizon_steps", "region", "episode"], kind="mergesort"
    ).reset_index(drop=True)


def setting_means(frame: pd.DataFrame, value: str) -> pd.DataFrame:
    """Mean and standard deviation of ``value`` across episodes per setting."""
    grouped = frame.groupby(GROUP_KEYS, sort=True)[value].agg(["mean", "std"]).reset_index()
    grouped["std"] = grouped["std"].fillna(0.0)
    return grouped.sort_values(["variant", "horizon_steps", "region"], kind="mergesort")


def summarize(
    metrics: pd.DataFrame, diversity: pd.DataFrame, extra: dict[str, Any] | None = None
) -> dict[str, Any]:
    """JSON-ready summary: per-setting mean and std of every score."""
    entries: dict[tuple[str, str, str], dict[str, Any]] = {}

    def collect(frame: pd.DataFrame, columns: list[str]) -> None:
        if frame.empty:
            return
        for column in columns:
            for row in setting_means(frame, column).itertuples(index=False):
                key = (row.variant, row.horizon, row.region)
                entry = entries.setdefault(
                    key,
                    {
                        "variant": row.variant,
                        "horizon": row.horizon,
                        "horizon_steps": int(row.horizon_steps),
                        "region": row.region,
                    },
                )
                entry[column] = {"mean": float(row.mean), "std": float(row.std)}

    collect(metrics, ["iou", "vpq", "iou_mean_rollout", "vpq_mean_rollout"])
    collect(diversity, ["ged", "modes"])
    ordered = sorted(
        entries.values(), key=lambda e: (e["variant"], e["horizon_steps"], e["region"])
    )
    return {
        "region_note": REGION_NOTE,
        "episodes": int(metrics["episode"].nunique()) if not metrics.empty else 0,
        "settings": ordered,
        **(extra or {}),
    }
