"""Unit tests for checkpoint, report and figure adapters."""

import json

import matplotlib.pyplot as plt
import pandas as pd
import pytest
import torch

from modules.engine.application.use_cases import build_model
from modules.engine.domain.reporting import DIVERSITY_COLUMNS, METRIC_COLUMNS
from modules.engine.infrastructure.checkpoints import (
    SCHEMA_VERSION,
    TorchCheckpointRepository,
    manifest_path,
)
from modules.engine.infrastructure import figures
from modules.engine.infrastructure.figures import (
    REGION_STYLES,
    TRAINING_HORIZON_STYLE,
    MatplotlibFigureWriter,
)
from modules.engine.infrastructure.reports import CsvReportRepository
from shared.exceptions import ConfigurationError, DataNotFoundError


@pytest.fixture
def saved(tmp_path, tiny_experiment):
    """Return a repository holding a saved tiny model, and the model."""
    torch.manual_seed(0)
    model = build_model(tiny_experiment)
    repository = TorchCheckpointRepository(tmp_path / "run")
    repository.save(model, tiny_experiment, {"epoch": 3, "val_loss": 1.25})
    return repository, model


class TestTorchCheckpointRepository:
    """Tests for TorchCheckpointRepository."""

    def test_round_trip(self, saved, tiny_experiment):
        """Test that loading rebuilds the same weights and experiment."""
        repository, model = saved
        loaded = repository.load(repository.path)
        assert loaded.experiment.config_hash() == tiny_experiment.config_hash()
        assert not loaded.model.training
        stored = loaded.model.state_dict()
        for key, value in model.state_dict().items():
            assert torch.equal(stored[key], value)

    def test_manifest_contents(self, saved, tiny_experiment):
        """Test the metadata written beside the weights."""
        repository, _ = saved
        manifest = json.loads(manifest_path(repository.path).read_text())
        assert manifest["schema_version"] == SCHEMA_VERSION
        assert manifest["variant"] == "stretchbev"
        assert manifest["config_hash"] == tiny_experiment.config_hash()
        assert manifest["epoch"] == 3
        assert repository.load(repository.path).manifest["val_loss"] == 1.25

    def test_save_replaces_previous(self, saved, tiny_experiment):
        """Test that a second save overwrites the checkpoint."""
        repository, model = saved
        with torch.no_grad():
            next(model.parameters()).add_(1.0)
        repository.save(model, tiny_experiment, {"epoch": 4})
        loaded = repository.load(repository.path).model
        assert torch.equal(next(loaded.parameters()), next(model.parameters()))
        assert list(repository.path.parent.glob("*.tmp")) == []

    def test_missing_manifest(self, tmp_path):
        """Test that a checkpoint without a manifest is not found."""
        with pytest.raises(DataNotFoundError):
            TorchCheckpointRepository(tmp_path).load(tmp_path / "model.pt")

    def test_missing_weights(self, saved):
        """Test that a manifest without weights is not found."""
        repository, _ = saved
        repository.path.unlink()
        with pytest.raises(DataNotFoundError):
            repository.load(repository.path)
        with pytest.raises(DataNotFoundError):
            repository.load_weights(repository.path)

    def test_unknown_schema(self, saved):
        """Test that a foreign schema version is rejected."""
        repository, _ = saved
        sidecar = manifest_path(repository.path)
        manifest = json.loads(sidecar.read_text())
        manifest["schema_version"] = SCHEMA_VERSION + 1
        sidecar.write_text(json.dumps(manifest))
        with pytest.raises(ConfigurationError):
            repository.load(repository.path)

    def test_weights_not_matching_manifest(self, saved):
        """Test that mis-shaped weights are reported per tensor."""
        repository, model = saved
        state = model.state_dict()
        key = next(k for k, v in state.items() if v.ndim > 0)
        state[key] = torch.zeros(*state[key].shape, 2)
        torch.save(state, repository.path)
        with pytest.raises(ConfigurationError) as exc_info:
            repository.load(repository.path)
        assert exc_info.value.details == [{"field": key, "message": "missing or mis-shaped"}]


class TestCsvReportRepository:
    """Tests for CsvReportRepository."""

    @staticmethod
    def _metrics():
        return pd.DataFrame(
            [[0, "stretchbev", "short", 4, "far", 1 / 3, 0.25, 0.5, 0.125]],
            columns=METRIC_COLUMNS,
        )

    def test_evaluation_round_trip(self, tmp_path):
        """Test that written tables and summary read back."""
        repository = CsvReportRepository(tmp_path)
        path = repository.write_evaluation(
            self._metrics(), pd.DataFrame(columns=DIVERSITY_COLUMNS), {"episodes": 1}
        )
        assert path == tmp_path / "metrics.csv"
        bundle = repository.read(path)
        assert bundle.metrics["iou"].iloc[0] == pytest.approx(0.333333)
        assert bundle.metrics["vpq"].iloc[0] == 0.25
        assert bundle.diversity.empty
        assert bundle.summary == {"episodes": 1}

    def test_fixed_precision(self, tmp_path):
        """Test that scores are written with six decimals."""
        path = CsvReportRepository(tmp_path).write_evaluation(
            self._metrics(), pd.DataFrame(columns=DIVERSITY_COLUMNS), {}
        )
        assert "0.333333," in path.read_text()

    def test_history(self, tmp_path):
        """Test that the training history is written at full precision."""
        path = CsvReportRepository(tmp_path).write_history(
            [{"epoch": 1, "train_loss": 1 / 3}, {"epoch": 2, "train_loss": 0.25}]
        )
        assert "0.3333333333333333" in path.read_text()
        assert list(pd.read_csv(path)["epoch"]) == [1, 2]

    def test_missing_report(self, tmp_path):
        """Test that reading an absent report raises DataNotFoundError."""
        with pytest.raises(DataNotFoundError):
            CsvReportRepository(tmp_path).read(tmp_path / "metrics.csv")

    def test_report_without_diversity_file(self, tmp_path):
        """Test that a report lacking ged.csv reads an empty diversity table."""
        self._metrics().to_csv(tmp_path / "metrics.csv", index=False)
        bundle = CsvReportRepository(tmp_path).read(tmp_path / "metrics.csv")
        assert list(bundle.diversity.columns) == DIVERSITY_COLUMNS
        assert bundle.summary == {}


class TestMatplotlibFigureWriter:
    """Tests for MatplotlibFigureWriter."""

    @staticmethod
    def _means():
        return pd.DataFrame(
            {
                "variant": ["stretchbev"] * 4,
                "horizon": ["short", "short", "mid", "mid"],
                "horizon_steps": [4, 4, 8, 8],
                "region": ["near", "far", "near", "far"],
                "mean": [0.5, 0.4, 0.3, 0.2],
                "std": [0.1, 0.0, 0.05, 0.0],
            }
        )

    def test_writes_files(self, tmp_path):
        """Test that both figure kinds are written as PNG files."""
        writer = MatplotlibFigureWriter()
        curves = writer.horizon_curves(self._means(), "iou", 4, tmp_path / "figs" / "iou.png")
        bars = writer.ged_bars(self._means(), tmp_path / "figs" / "ged.png")
        for path in (curves, bars):
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_identical_inputs_identical_files(self, tmp_path):
        """Test that figures are byte-reproducible."""
        writer = MatplotlibFigureWriter()
        a = writer.horizon_curves(self._means(), "vpq", None, tmp_path / "a.png")
        b = writer.horizon_curves(self._means(), "vpq", None, tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()

    def test_training_horizon_marker_style(self, tmp_path, monkeypatch):
        """Test that the training-horizon line is styled apart from the curves."""
        drawn = []

        def keep(fig, path):
            drawn.append([(line.get_label(), line.get_linestyle()) for line in fig.axes[0].lines])
            plt.close(fig)
            return path

        monkeypatch.setattr(figures, "_save", keep)
        MatplotlibFigureWriter().horizon_curves(self._means(), "iou", 4, tmp_path / "iou.png")
        (marker,) = [style for label, style in drawn[0] if label == "training horizon"]
        assert marker == TRAINING_HORIZON_STYLE
        curve_styles = {style for label, style in drawn[0] if label != "training horizon"}
        assert {"--", "-"} <= curve_styles
        assert TRAINING_HORIZON_STYLE not in curve_styles
        assert TRAINING_HORIZON_STYLE not in REGION_STYLES.values()
