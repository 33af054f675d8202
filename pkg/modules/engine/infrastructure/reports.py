"""CSV and JSON report files.

An evaluation report is ``metrics.csv`` (IoU/VPQ rows), ``ged.csv``
(diversity rows) and ``summary.json`` in one directory. Training writes
``history.csv`` next to its checkpoint.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd

from modules.engine.application.dto import ReportBundle
from modules.engine.application.interfaces import ReportRepository
from modules.engine.domain.reporting import DIVERSITY_COLUMNS, METRIC_COLUMNS
from shared.exceptions import DataNotFoundError
from shared.logging import get_logger

logger = get_logger(__name__)

METRICS_NAME = "metrics.csv"
DIVERSITY_NAME = "ged.csv"
SUMMARY_NAME = "summary.json"
HISTORY_NAME = "history.csv"
FLOAT_FORMAT = "%.6f"


def _read_table(path: Path, columns: list[str]) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)


class CsvReportRepository(ReportRepository):
    """Report files under one output directory."""

    def __init__(self, root: Path | str) -> None:
        self._root = Path(root)

    def write_history(self, rows: list[dict[str, Any]]) -> Path:
        self._root.mkdir(parents=True, exist_ok=True)
        path = self._root / HISTORY_NAME
        # Full precision: train_loss must equal the sum of its columns.
        pd.DataFrame(rows).to_csv(path, index=False)
        return path

    def write_evaluation(
        self,
        metrics: pd.DataFrame,
        diversity: pd.DataFrame,
        summary: dict[str, Any],
    ) -> Path:
        self._root.mkdir(parents=True, exist_ok=True)
        metrics_path = self._root / METRICS_NAME
        metrics.to_csv(metrics_path, index=False, float_format=FLOAT_FORMAT)
        diversity.to_csv(self._root / DIVERSITY_NAME, index=False, float_format=FLOAT_FORMAT)
        (self._root / SUMMARY_NAME).write_text(
            json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
        )
        logger.info("report_written", path=str(metrics_path), rows=len(metrics))
        return metrics_path

    def read(self, metrics_path: Path) -> ReportBundle:
        metrics_path = Path(metrics_path)
        if not metrics_path.exists():
            raise DataNotFoundError("report", str(metrics_path))
        diversity_path = metrics_path.with_name(DIVERSITY_NAME)
        summary_path = metrics_path.with_name(SUMMARY_NAME)
        return ReportBundle(
            metrics=_read_table(metrics_path, METRIC_COLUMNS),
            diversity=(
                _read_table(diversity_path, DIVERSITY_COLUMNS)
                if diversity_path.exists()
                else pd.DataFrame(columns=DIVERSITY_COLUMNS)
            ),
            summary=(
                json.loads(summary_path.read_text(encoding="utf-8"))
                if summary_path.exists()
                else {}
            ),
        )
