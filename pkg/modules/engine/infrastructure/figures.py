"""Evaluation figures with matplotlib.

Figures are drawn with the Agg backend in a fixed series order and saved
without a software tag, so identical reports give identical files.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from modules.engine.application.interfaces import FigureWriter  # noqa: E402
from shared.logging import get_logger  # noqa: E402

if TYPE_CHECKING:
    from pathlib import Path

    import pandas as pd

logger = get_logger(__name__)

REGION_STYLES = {"near": "--", "far": "-"}
# Must differ from every region style.
TRAINING_HORIZON_STYLE = "-."
FIGURE_SIZE = (6.0, 4.0)
DPI = 100


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    logger.debug("figure_saved", path=str(path))
    return path


class MatplotlibFigureWriter(FigureWriter):
    """Line plots over horizons and GED bar charts."""

    def horizon_curves(
        self,
        means: pd.DataFrame,
        value: str,
        training_horizon: int | None,
        path: Path,
    ) -> Path:
        fig, ax = plt.subplots(figsize=FIGURE_SIZE)
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, variant in enumerate(sorted(means["variant"].unique())):
            for region, style in REGION_STYLES.items():
                series = means[(means["variant"] == variant) & (means["region"] == region)]
                if series.empty:
                    continue
                series = series.sort_values("horizon_steps")
                ax.errorbar(
                    series["horizon_steps"],
                    series["mean"],
                    yerr=series["std"],
                    linestyle=style,
                    marker="o",
                    capsize=3,
                    color=colors[i % len(colors)],
                    label=f"{variant} ({region})",
                )
        if training_horizon is not None:
            ax.axvline(
                training_horizon,
                color="gray",
                linestyle=TRAINING_HORIZON_STYLE,
                label="training horizon",
            )
        ax.set_xlabel("future steps")
        ax.set_ylabel(value.upper())
        ax.set_ylim(0.0, 1.0)
        ax.legend(fontsize="small")
        fig.tight_layout()
        return _save(fig, path)

    def ged_bars(self, means: pd.DataFrame, path: Path) -> Path:
        means = means.sort_values(["horizon_steps", "region", "variant"], kind="mergesort")
        settings = list(dict.fromkeys(zip(means["horizon"], means["region"], strict=True)))
        variants = sorted(means["variant"].unique())
        width = 0.8 / max(len(variants), 1)
        positions = np.arange(len(settings))

        fig, ax = plt.subplots(figsize=FIGURE_SIZE)
        for i, variant in enumerate(variants):
            rows = means[means["variant"] == variant].set_index(["horizon", "region"])
            heights = [
                float(rows.loc[s, "mean"]) if s in rows.index else 0.0 for s in settings
            ]
            errors = [float(rows.loc[s, "std"]) if s in rows.index else 0.0 for s in settings]
            ax.bar(positions + i * width, heights, width, yerr=errors, capsize=3, label=variant)
        ax.set_xticks(positions + width * (len(variants) - 1) / 2)
        ax.set_xticklabels([f"{h}/{r}" for h, r in settings])
        ax.set_ylabel("GED (scaled)")
        ax.legend(fontsize="small")
        fig.tight_layout()
        return _save(fig, path)
