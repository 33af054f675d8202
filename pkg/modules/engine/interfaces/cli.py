"""Command-line surface of the lab.

Subcommands:
- ``gen-data``: simulate, render and label a dataset of episodes
- ``train``: pre-train, jointly train or fine-tune a model
- ``eval``: score a checkpoint's rollouts and write report files
- ``plot``: draw figures from evaluation reports

Results go to stdout as JSON; logs and error payloads go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import uuid
from dataclasses import asdict, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any

from pydantic import ValidationError

from config.env import Settings, get_settings
from config.experiment import load_experiment_config
from modules.dynamics.domain.value_objects import VariantFlag
from modules.engine.application.dto import EvaluateCommand, PlotCommand, TrainCommand
from modules.engine.application.use_cases import EvaluateCheckpoint, PlotReport, TrainModel
from modules.engine.domain.enums import TrainingMode
from modules.engine.infrastructure.checkpoints import TorchCheckpointRepository
from modules.engine.infrastructure.figures import MatplotlibFigureWriter
from modules.engine.infrastructure.reports import CsvReportRepository
from modules.metrics.domain.value_objects import parse_horizons
from modules.world.application.dto import GenerateDatasetCommand
from modules.world.application.use_cases import GenerateDataset
from modules.world.infrastructure.repositories import NpzEpisodeRepository
from shared.events import StructlogEventPublisher
from shared.exceptions import (
    ConfigurationError,
    LabError,
    exit_code_for,
    format_error_response,
)
from shared.logging import bind_run_context, clear_run_context, configure_structlog, get_logger

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(prog="stretchlab", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen-data", help="generate a dataset of episodes")
    gen.add_argument("--config", type=Path, default=None, help="experiment JSON")
    gen.add_argument("--out", type=Path, required=True, help="dataset directory")
    gen.add_argument("--episodes", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0, help="dataset seed")
    gen.add_argument(
        "--workers", type=int, default=None, help="worker processes (capped by STRETCHLAB_THREADS)"
    )

    train = commands.add_parser("train", help="train a model")
    train.add_argument("--mode", choices=[m.value for m in TrainingMode], default=None)
    train.add_argument("--variant", choices=[v.value for v in VariantFlag], default=None)
    train.add_argument("--config", type=Path, default=None, help="experiment JSON")
    train.add_argument("--data", type=Path, required=True, help="dataset directory")
    train.add_argument("--out", type=Path, required=True, help="run directory")
    train.add_argument("--init", type=Path, default=None, help="checkpoint to start from")
    train.add_argument("--epochs", type=int, default=None, help="override max_epochs")

    evaluate = commands.add_parser("eval", help="evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True, help="dataset directory")
    evaluate.add_argument("--out", type=Path, required=True, help="report directory")
    evaluate.add_argument("--samples", type=int, help="default: the experiment's n_samples")
    evaluate.add_argument("--settings", help="comma-separated horizons (default: the experiment's)")
    evaluate.add_argument("--seed", type=int, help="default: the experiment's evaluation seed")
    evaluate.add_argument("--split", choices=["val", "all"], default="val")

    plot = commands.add_parser("plot", help="plot evaluation reports")
    plot.add_argument("--report", type=Path, nargs="+", required=True, help="metrics.csv files")
    plot.add_argument("--out", type=Path, required=True, help="figure directory")
    return parser


# =============================================================================
# Command handlers
# =============================================================================


def _gen_data(args: argparse.Namespace, settings: Settings, run_id: str) -> Any:
    experiment = load_experiment_config(args.config)
    if args.episodes < 1:
        raise ConfigurationError("--episodes must be >= 1", field="episodes")
    requested = args.workers if args.workers is not None else settings.threads
    if requested < 1:
        raise ConfigurationError("--workers must be >= 1", field="workers")
    use_case = GenerateDataset(NpzEpisodeRepository(args.out), StructlogEventPublisher(), run_id)
    return use_case.execute(
        GenerateDatasetCommand(
            world=experiment.world,
            rig=experiment.rig,
            episodes=args.episodes,
            seed=args.seed,
            config_hash=experiment.config_hash(),
            workers=min(requested, settings.threads),
        )
    )


def _train(args: argparse.Namespace, settings: Settings, run_id: str) -> Any:
    experiment = load_experiment_config(args.config)
    overrides: dict[str, Any] = {}
    if args.mode is not None:
        overrides["mode"] = TrainingMode(args.mode)
    if args.variant is not None:
        overrides["variant"] = VariantFlag(args.variant)
    if args.epochs is not None:
        overrides["max_epochs"] = args.epochs
    if overrides:
        experiment = experiment.model_copy(update={"train": replace(experiment.train, **overrides)})
    use_case = TrainModel(
        NpzEpisodeRepository(args.data),
        TorchCheckpointRepository(args.out),
        CsvReportRepository(args.out),
        StructlogEventPublisher(),
        run_id,
        device=settings.device,
        threads=settings.threads,
    )
    return use_case.execute(TrainCommand(experiment=experiment, init_checkpoint=args.init))


def _evaluate(args: argparse.Namespace, settings: Settings, run_id: str) -> Any:
    use_case = EvaluateCheckpoint(
        NpzEpisodeRepository(args.data),
        TorchCheckpointRepository(args.checkpoint.parent),
        CsvReportRepository(args.out),
        StructlogEventPublisher(),
        run_id,
        device=settings.device,
        threads=settings.threads,
    )
    return use_case.execute(
        EvaluateCommand(
            checkpoint_path=args.checkpoint,
            horizons=None if args.settings is None else tuple(parse_horizons(args.settings)),
            n_samples=args.samples,
            seed=args.seed,
            split=args.split,
        )
    )


def _plot(args: argparse.Namespace, settings: Settings, run_id: str) -> Any:
    use_case = PlotReport(CsvReportRepository(args.out), MatplotlibFigureWriter())
    return use_case.execute(PlotCommand(report_paths=tuple(args.report), out_dir=args.out))


HANDLERS: dict[str, Callable[[argparse.Namespace, Settings, str], Any]] = {
    "gen-data": _gen_data,
    "train": _train,
    "eval": _evaluate,
    "plot": _plot,
}


def _load_settings() -> Settings:
    try:
        return get_settings()
    except ValidationError as exc:
        raise ConfigurationError(
            "invalid environment settings",
            details=[
                {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
                for e in exc.errors()
            ],
        ) from exc


def _report_error(exc: LabError, run_id: str) -> int:
    details = getattr(exc, "details", None)
    payload = format_error_response(exc.code, exc.message, details, run_id)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return exit_code_for(exc)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit status."""
    args = build_parser().parse_args(argv)
    run_id = uuid.uuid4().hex[:12]
    try:
        settings = _load_settings()
    except ConfigurationError as exc:
        configure_structlog()
        return _report_error(exc, run_id)

    configure_structlog(json_format=settings.log_json, level=settings.log_level)
    bind_run_context(run_id=run_id, command=args.command)
    try:
        result = HANDLERS[args.command](args, settings, run_id)
    except LabError as exc:
        logger.error("command_failed", code=exc.code, error=exc.message)
        return _report_error(exc, run_id)
    finally:
        clear_run_context()

    print(json.dumps(asdict(result), default=str, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
