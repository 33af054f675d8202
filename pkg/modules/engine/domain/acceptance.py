"""Directional checks over evaluation reports.

Every check reads the per-episode frames written by ``EvaluateCheckpoint``
(``metrics.csv`` and ``ged.csv``) and returns a ``CheckResult`` carrying
the compared means, so a failed run can be reported without re-reading
the files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import pandas as pd

from modules.engine.domain.reporting import setting_means
from modules.engine.domain.services import COPY_LAST, ZERO_NOISE_SUFFIX
from shared.exceptions import EmptyReportError


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one directional check.

    Attributes:
        name: Short label of the check.
        passed: Whether the direction holds.
        values: Compared quantities keyed by a readable label.
    """

    name: str
    passed: bool
    values: dict[str, float] = field(default_factory=dict)


def _select(
    frame: pd.DataFrame, variant: str, horizon: str | None = None, region: str | None = None
) -> pd.DataFrame:
    mask = frame["variant"] == variant
    if horizon is not None:
        mask &= frame["horizon"] == horizon
    if region is not None:
        mask &= frame["region"] == region
    rows = frame[mask]
    if rows.empty:
        raise EmptyReportError(f"variant={variant} horizon={horizon} region={region}")
    return rows


def learning_signal(
    metrics: pd.DataFrame,
    variant: str,
    min_gain: float = 0.10,
    horizon: str = "short",
    region: str = "near",
) -> CheckResult:
    """Whether ``variant`` beats copy-last IoU by ``min_gain`` relative.

    Raises:
        EmptyReportError: If either series is missing from ``metrics``.
    """
    model = float(_select(metrics, variant, horizon, region)["iou"].mean())
    baseline = float(_select(metrics, COPY_LAST, horizon, region)["iou"].mean())
    return CheckResult(
        name="learning_signal",
        passed=model >= (1.0 + min_gain) * baseline,
        values={variant: model, COPY_LAST: baseline},
    )


def horizon_trend(metrics: pd.DataFrame, variant: str, slack: float = 0.01) -> CheckResult:
    """Whether mean IoU and VPQ do not rise from shorter to longer horizons.

    Adjacent horizons may rise by at most ``slack`` (absolute). Each region
    is checked on its own.

    Raises:
        EmptyReportError: If ``variant`` has no rows.
    """
    rows = _select(metrics, variant)
    values: dict[str, float] = {}
    passed = True
    for value in ("iou", "vpq"):
        means = setting_means(rows, value)
        for region, series in means.groupby("region", sort=True):
            ordered = series.sort_values("horizon_steps")
            for horizon, mean in zip(ordered["horizon"], ordered["mean"], strict=True):
                values[f"{value}/{region}/{horizon}"] = float(mean)
            steps = ordered["mean"].to_numpy()
            passed &= bool((steps[1:] <= steps[:-1] + slack).all())
    return CheckResult(name="horizon_trend", passed=passed, values=values)


def not_worse(
    candidate: pd.DataFrame,
    candidate_variant: str,
    reference: pd.DataFrame,
    reference_variant: str,
    value: str,
    region: str,
) -> CheckResult:
    """Whether the candidate is not worse than the reference on ``value``.

    The candidate fails a horizon only when its mean trails the reference
    by more than the pooled standard deviation across episodes,
    ``sqrt((std_c**2 + std_r**2) / 2)``. Every horizon present in both
    frames must pass.

    Raises:
        EmptyReportError: If either variant has no rows in ``region``, or
            the two frames share no horizon.
    """
    ours = setting_means(_select(candidate, candidate_variant, region=region), value)
    theirs = setting_means(_select(reference, reference_variant, region=region), value)
    joined = ours.merge(theirs, on=["horizon", "horizon_steps"], suffixes=("_c", "_r"))
    if joined.empty:
        raise EmptyReportError(f"{candidate_variant} vs {reference_variant}: no shared horizon")
    values: dict[str, float] = {}
    passed = True
    for row in joined.sort_values("horizon_steps").itertuples(index=False):
        pooled = math.sqrt((row.std_c**2 + row.std_r**2) / 2.0)
        values[f"{candidate_variant}/{row.horizon}"] = float(row.mean_c)
        values[f"{reference_variant}/{row.horizon}"] = float(row.mean_r)
        values[f"pooled_std/{row.horizon}"] = pooled
        passed &= bool(row.mean_c >= row.mean_r - pooled)
    return CheckResult(name=f"not_worse_{value}_{region}", passed=passed, values=values)


def diversity_direction(
    diversity: pd.DataFrame,
    variant: str,
    min_modes: int = 2,
    horizon: str | None = None,
    region: str | None = None,
) -> CheckResult:
    """Whether sampling lowers GED and yields several occupancy modes.

    The mean scaled GED of ``variant`` must be strictly below the mean of
    its zero-noise ablation over the selected rows, and at least one
    episode must show ``min_modes`` distinct final-frame modes.

    Raises:
        EmptyReportError: If either series is missing from ``diversity``.
    """
    sampled = _select(diversity, variant, horizon, region)
    ablation = _select(diversity, variant + ZERO_NOISE_SUFFIX, horizon, region)
    ged, ged_ablation = float(sampled["ged"].mean()), float(ablation["ged"].mean())
    modes = int(sampled["modes"].max())
    return CheckResult(
        name="diversity_direction",
        passed=ged < ged_ablation and modes >= min_modes,
        values={
            variant: ged,
            variant + ZERO_NOISE_SUFFIX: ged_ablation,
            "max_modes": float(modes),
        },
    )
