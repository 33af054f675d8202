"""Use cases for the engine module.

Training, evaluation and plotting orchestrate the domain model with the
episode, checkpoint and report repositories and the event publisher.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, fields, replace
from typing import TYPE_CHECKING, Any

import pandas as pd
import torch

from modules.dynamics.domain.value_objects import VariantFlag
from modules.engine.application.dto import (
    EvaluationResultDTO,
    PlotResultDTO,
    StageResultDTO,
    TrainingResultDTO,
)
from modules.engine.domain.entities import EpisodeBatch
from modules.engine.domain.enums import LossStage, TrainingMode
from modules.engine.domain.events import (
    CheckpointSaved,
    EpochCompleted,
    EvaluationCompleted,
    TrainingAborted,
)
from modules.engine.domain.model import LossBreakdown, StretchBEVModel
from modules.engine.domain.reporting import diversity_frame, metric_frame, setting_means, summarize
from modules.engine.domain.services import (
    PredictedSequence,
    build_plateau_scheduler,
    copy_last_baseline,
    postprocess_samples,
    score_baseline,
    score_episode,
    split_by_seed,
)
from modules.metrics.domain.exceptions import HorizonUnavailableError
from modules.metrics.domain.value_objects import all_settings
from shared.exceptions import (
    ConfigurationError,
    DataNotFoundError,
    EmptyReportError,
    NumericalInstabilityError,
)
from shared.logging import bind_run_context, get_logger
from shared.seeding import derive_seed, seed_everything, torch_generator

if TYPE_CHECKING:
    from pathlib import Path

    from torch import nn

    from config.experiment import ExperimentConfig
    from modules.engine.application.dto import EvaluateCommand, PlotCommand, TrainCommand
    from modules.engine.application.interfaces import (
        CheckpointRepository,
        FigureWriter,
        ReportRepository,
    )
    from modules.engine.domain.services import DiversityRow, MetricRow
    from modules.engine.domain.value_objects import TrainConfig
    from modules.metrics.domain.value_objects import EvalSetting
    from modules.world.application.interfaces import EpisodeRepository
    from modules.world.domain.entities import Episode
    from shared.events import EventPublisher

logger = get_logger(__name__)

LOSS_COMPONENTS = tuple(f.name for f in fields(LossBreakdown))

# Keys of the random streams derived from the training seed.
_TRAIN_NOISE = 0
_VAL_NOISE = 1
_SHUFFLE = 2


def build_model(
    experiment: ExperimentConfig, variant: VariantFlag | None = None
) -> StretchBEVModel:
    """Instantiate the model an experiment describes."""
    return StretchBEVModel(
        experiment.world,
        experiment.rig,
        experiment.frustum,
        experiment.model,
        variant or experiment.train.variant,
    )


def dataset_split(episodes: EpisodeRepository, val_fraction: float) -> tuple[list[int], list[int]]:
    """Training and validation indices of the stored episodes.

    Raises:
        DataNotFoundError: If the dataset holds no episodes.
    """
    indices = episodes.indices()
    if not indices:
        raise DataNotFoundError("episodes", "dataset directory is empty")
    seeds = {index: int(episodes.metadata(index)["seed"]) for index in indices}
    return split_by_seed(seeds, val_fraction)


def check_episode(episode: Episode, experiment: ExperimentConfig, steps: int) -> None:
    """Reject episodes whose layout differs from the experiment's.

    Raises:
        ConfigurationError: On a camera, image, grid or length mismatch.
    """
    rig, world = experiment.rig, experiment.world
    expected = (rig.n_cameras, 3, *rig.image_size)
    if tuple(episode.images.shape[1:]) != expected:
        raise ConfigurationError(
            f"episode images are {list(episode.images.shape[1:])}, config expects {list(expected)}",
            field="rig",
        )
    grid = tuple(episode.labels.segmentation.shape[1:])
    if grid != (world.grid_cells, world.grid_cells):
        raise ConfigurationError(
            f"episode grid is {list(grid)}, config expects {world.grid_cells}", field="world"
        )
    if episode.length < steps:
        raise ConfigurationError(
            f"episode has {episode.length} steps, {steps} required", field="episode_len"
        )


@dataclass(frozen=True, eq=False)
class _Stage:
    loss: LossStage
    epochs: int
    param_groups: list[dict[str, Any]]


def plan_stages(model: StretchBEVModel, config: TrainConfig) -> list[_Stage]:
    """Optimization stages of a training mode.

    - PRETRAIN: single-frame supervision of the extractor and heads, then
      the state ELBO with the extractor frozen.
    - JOINT: every parameter on the joint objective.
    - FINETUNE: the joint objective with the dynamics learning rate scaled
      by ``finetune_lr_factor``.
    """
    if config.mode is TrainingMode.PRETRAIN:
        stages = []
        if config.frame_epochs > 0:
            stages.append(
                _Stage(
                    LossStage.FRAMES,
                    config.frame_epochs,
                    [{"params": model.extractor_parameters(), "lr": config.lr}],
                )
            )
        stages.append(
            _Stage(
                LossStage.DYNAMICS,
                config.max_epochs,
                [{"params": model.dynamics_parameters(), "lr": config.lr}],
            )
        )
        return stages
    if config.mode is TrainingMode.FINETUNE:
        return [
            _Stage(
                LossStage.JOINT,
                config.max_epochs,
                [
                    {"params": model.extractor_parameters(), "lr": config.lr},
                    {
                        "params": model.dynamics_parameters(),
                        "lr": config.lr * config.finetune_lr_factor,
                    },
                ],
            )
        ]
    everything = [{"params": list(model.parameters()), "lr": config.lr}]
    return [_Stage(LossStage.JOINT, config.max_epochs, everything)]


def _set_trainable(module: nn.Module, trainable: bool) -> None:
    for param in module.parameters():
        param.requires_grad_(trainable)


class _EpisodeData:
    """Episodes held in memory and batched on demand."""

    def __init__(
        self,
        episodes: dict[int, Episode],
        window: int,
        device: torch.device | str,
        dtype: torch.dtype,
    ) -> None:
        self._episodes = episodes
        self._window = window
        self._device = device
        self._dtype = dtype

    def batch(self, indices: list[int]) -> EpisodeBatch:
        batch = EpisodeBatch.from_episodes(
            indices, [self._episodes[i] for i in indices], dtype=self._dtype
        )
        return batch.window(self._window).to(self._device)


class TrainModel:
    """Use case for training a model in one of the three modes."""

    def __init__(
        self,
        episode_repository: EpisodeRepository,
        checkpoint_repository: CheckpointRepository,
        report_repository: ReportRepository,
        event_publisher: EventPublisher,
        run_id: str,
        device: torch.device | str = "cpu",
        threads: int = 1,
    ) -> None:
        self._episodes = episode_repository
        self._checkpoints = checkpoint_repository
        self._reports = report_repository
        self._event_publisher = event_publisher
        self._run_id = run_id
        self._device = device
        self._threads = threads

    def execute(self, command: TrainCommand) -> TrainingResultDTO:
        """Train, keeping the checkpoint with the best validation loss.

        Args:
            command: Training command.

        Returns:
            Training summary.

        Raises:
            ConfigurationError: If the mode and variant are incompatible, a
                finetune run lacks an init checkpoint, or the episodes do
                not fit the experiment.
            DataNotFoundError: If the dataset or init checkpoint is missing.
            NumericalInstabilityError: If a loss becomes non-finite; the
                last saved checkpoint is left in place.
        """
        experiment = command.experiment
        config = experiment.train
        if config.mode is TrainingMode.PRETRAIN and config.variant.uses_modalities:
            raise ConfigurationError(
                "pre-training is unsupervised and cannot train the modality-conditioned variant",
                field="variant",
            )
        if config.mode is TrainingMode.FINETUNE and command.init_checkpoint is None:
            raise ConfigurationError("finetune mode requires an init checkpoint", field="init")

        seed_everything(config.seed, self._threads)
        train_indices, val_indices = dataset_split(self._episodes, config.val_fraction)
        world = experiment.world
        window = config.window_len(world.episode_len, world.conditioning_len)
        if window <= world.conditioning_len:
            raise ConfigurationError("training window holds no future steps", field="train_horizon")

        episodes = {i: self._episodes.load(i) for i in sorted({*train_indices, *val_indices})}
        for episode in episodes.values():
            check_episode(episode, experiment, window)

        model = build_model(experiment).to(self._device)
        if command.init_checkpoint is not None:
            self._initialize(model, command.init_checkpoint)
        data = _EpisodeData(episodes, window, self._device, next(model.parameters()).dtype)

        logger.info(
            "training_started",
            mode=config.mode.value,
            variant=config.variant.value,
            train_episodes=len(train_indices),
            val_episodes=len(val_indices),
            window=window,
        )
        history: list[dict[str, Any]] = []
        results = []
        try:
            for stage_index, stage in enumerate(plan_stages(model, config)):
                results.append(
                    self._run_stage(
                        model,
                        stage,
                        stage_index,
                        experiment,
                        data,
                        train_indices,
                        val_indices,
                        history,
                    )
                )
        finally:
            if history:
                self._reports.write_history(history)

        return TrainingResultDTO(
            checkpoint_path=self._checkpoints.path,
            variant=config.variant.value,
            mode=config.mode.value,
            stages=tuple(results),
            config_hash=experiment.config_hash(),
        )

    def _initialize(self, model: StretchBEVModel, path: Path) -> None:
        """Copy every weight whose name and shape match from ``path``."""
        stored = self._checkpoints.load_weights(path)
        own = model.state_dict()
        compatible = {
            key: value
            for key, value in stored.items()
            if key in own and tuple(own[key].shape) == tuple(value.shape)
        }
        model.load_state_dict(compatible, strict=False)
        skipped = sorted(set(own) - set(compatible))
        if skipped:
            logger.warning("init_weights_skipped", path=str(path), keys=skipped)
        logger.info("init_weights_loaded", path=str(path), tensors=len(compatible))

    def _run_stage(
        self,
        model: StretchBEVModel,
        stage: _Stage,
        stage_index: int,
        experiment: ExperimentConfig,
        data: _EpisodeData,
        train_indices: list[int],
        val_indices: list[int],
        history: list[dict[str, Any]],
    ) -> StageResultDTO:
        config = experiment.train
        bind_run_context(stage=stage.loss.value)
        frozen = stage.loss is LossStage.DYNAMICS
        if frozen:
            _set_trainable(model.state_extractor, False)
            _set_trainable(model.heads, False)

        optimizer = torch.optim.Adam(stage.param_groups)
        scheduler = build_plateau_scheduler(optimizer, config)
        shuffle = torch_generator(derive_seed(config.seed, _SHUFFLE, stage_index))
        noise = torch_generator(derive_seed(config.seed, _TRAIN_NOISE, stage_index))

        best_loss, best_epoch = math.inf, 0
        best_state: dict[str, torch.Tensor] | None = None
        for epoch in range(1, stage.epochs + 1):
            lr = float(optimizer.param_groups[0]["lr"])
            try:
                train_terms = self._train_epoch(
                    model, stage, optimizer, data, train_indices, shuffle, noise, config
                )
                val_terms = self._validate(model, stage, data, val_indices, config)
            except NumericalInstabilityError as exc:
                logger.error("training_aborted", epoch=epoch, **exc.diagnostics)
                self._event_publisher.publish(
                    TrainingAborted(
                        run_id=self._run_id,
                        stage=stage.loss.value,
                        epoch=epoch,
                        reason=exc.message,
                        diagnostics=exc.diagnostics,
                    )
                )
                raise

            train_loss = sum(train_terms.values())
            val_loss = sum(val_terms.values())
            scheduler.step(val_loss)
            history.append(
                {
                    "stage": stage.loss.value,
                    "epoch": epoch,
                    "lr": lr,
                    **{f"train_{k}": v for k, v in train_terms.items()},
                    "train_loss": train_loss,
                    **{f"val_{k}": v for k, v in val_terms.items()},
                    "val_loss": val_loss,
                }
            )
            logger.debug("epoch_components", epoch=epoch, **train_terms)
            self._event_publisher.publish(
                EpochCompleted(
                    run_id=self._run_id,
                    stage=stage.loss.value,
                    epoch=epoch,
                    train_loss=train_loss,
                    val_loss=val_loss,
                    lr=lr,
                )
            )

            if val_loss < best_loss:
                best_loss, best_epoch = val_loss, epoch
                best_state = copy.deepcopy(model.state_dict())
                path = self._checkpoints.save(
                    model,
                    experiment,
                    {"stage": stage.loss.value, "epoch": epoch, "val_loss": val_loss},
                )
                self._event_publisher.publish(
                    CheckpointSaved(
                        run_id=self._run_id,
                        path=str(path),
                        stage=stage.loss.value,
                        epoch=epoch,
                        val_loss=val_loss,
                    )
                )

        if best_state is not None:
            model.load_state_dict(best_state)
        if frozen:
            _set_trainable(model.state_extractor, True)
            _set_trainable(model.heads, True)
        return StageResultDTO(
            stage=stage.loss.value,
            epochs=stage.epochs,
            best_epoch=best_epoch,
            best_val_loss=best_loss,
        )

    def _train_epoch(
        self,
        model: StretchBEVModel,
        stage: _Stage,
        optimizer: torch.optim.Optimizer,
        data: _EpisodeData,
        indices: list[int],
        shuffle: torch.Generator,
        noise: torch.Generator,
        config: TrainConfig,
    ) -> dict[str, float]:
        """One pass over the training episodes; returns per-episode means."""
        model.train()
        if stage.loss is LossStage.DYNAMICS:
            model.state_extractor.eval()
            model.heads.eval()
        order = torch.randperm(len(indices), generator=shuffle).tolist()
        sums = dict.fromkeys(LOSS_COMPONENTS, 0.0)
        for start in range(0, len(order), config.batch_size):
            batch = data.batch([indices[i] for i in order[start : start + config.batch_size]])
            optimizer.zero_grad(set_to_none=True)
            breakdown = model.compute_loss(batch, stage.loss, config.loss_weights, noise)
            breakdown.total.backward()
            optimizer.step()
            for key, value in breakdown.as_floats().items():
                sums[key] += value * batch.size
        return {key: value / len(order) for key, value in sums.items()}

    def _validate(
        self,
        model: StretchBEVModel,
        stage: _Stage,
        data: _EpisodeData,
        indices: list[int],
        config: TrainConfig,
    ) -> dict[str, float]:
        """Validation loss terms with fixed reparametrization noise."""
        model.eval()
        noise = torch_generator(derive_seed(config.seed, _VAL_NOISE))
        sums = dict.fromkeys(LOSS_COMPONENTS, 0.0)
        with torch.no_grad():
            for start in range(0, len(indices), config.batch_size):
                batch = data.batch(indices[start : start + config.batch_size])
                breakdown = model.compute_loss(batch, stage.loss, config.loss_weights, noise)
                for key, value in breakdown.as_floats().items():
                    sums[key] += value * batch.size
        return {key: value / len(indices) for key, value in sums.items()}


class EvaluateCheckpoint:
    """Use case for scoring a checkpoint's rollouts on stored episodes."""

    def __init__(
        self,
        episode_repository: EpisodeRepository,
        checkpoint_repository: CheckpointRepository,
        report_repository: ReportRepository,
        event_publisher: EventPublisher,
        run_id: str,
        device: torch.device | str = "cpu",
        threads: int = 1,
    ) -> None:
        self._episodes = episode_repository
        self._checkpoints = checkpoint_repository
        self._reports = report_repository
        self._event_publisher = event_publisher
        self._run_id = run_id
        self._device = device
        self._threads = threads

    def execute(self, command: EvaluateCommand) -> EvaluationResultDTO:
        """Roll out, post-process and score every selected episode.

        Rows are written for the checkpoint's variant, its zero-noise
        ablation (diversity only) and the copy-last-frame baseline.

        Raises:
            ConfigurationError: If ``n_samples`` < 1 or no horizon is given.
                Explicit values are checked before the checkpoint is loaded.
            DataNotFoundError: If the checkpoint or episodes are missing.
            HorizonUnavailableError: If an episode is too short for the
                longest requested horizon.
        """
        if command.n_samples is not None and command.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1", field="samples")
        if command.horizons is not None and not command.horizons:
            raise ConfigurationError("at least one horizon is required", field="settings")

        loaded = self._checkpoints.load(command.checkpoint_path, self._device)
        experiment, model = loaded.experiment, loaded.model
        defaults = experiment.evaluation
        command = replace(
            command,
            horizons=command.horizons or defaults.horizons,
            n_samples=command.n_samples or defaults.n_samples,
            seed=defaults.seed if command.seed is None else command.seed,
        )
        seed_everything(command.seed, self._threads)

        if command.split == "val":
            _, indices = dataset_split(self._episodes, experiment.train.val_fraction)
        else:
            indices = self._episodes.indices()
            if not indices:
                raise DataNotFoundError("episodes", "dataset directory is empty")

        settings = all_settings(list(command.horizons))
        steps = max(setting.horizon.steps for setting in settings)
        if command.n_samples < 2:
            logger.warning("diversity_skipped", n_samples=command.n_samples)
        logger.info(
            "evaluation_started",
            checkpoint=str(command.checkpoint_path),
            episodes=len(indices),
            settings=[s.label for s in settings],
            n_samples=command.n_samples,
        )

        metric_rows: list[MetricRow] = []
        diversity_rows: list[DiversityRow] = []
        for index in indices:
            metrics, diversity = self._score_episode(
                model, experiment, index, command, settings, steps
            )
            metric_rows += metrics
            diversity_rows += diversity

        metrics_frame = metric_frame(metric_rows)
        ged_frame = diversity_frame(diversity_rows)
        world = experiment.world
        window = experiment.train.window_len(world.episode_len, world.conditioning_len)
        summary = summarize(
            metrics_frame,
            ged_frame,
            extra={
                "training_horizon": window - world.conditioning_len,
                "conditioning_len": world.conditioning_len,
                "config_hash": loaded.manifest.get("config_hash", experiment.config_hash()),
                "variant": model.variant.value,
                "n_samples": command.n_samples,
                "seed": command.seed,
                "split": command.split,
            },
        )
        report_path = self._reports.write_evaluation(metrics_frame, ged_frame, summary)
        self._event_publisher.publish(
            EvaluationCompleted(
                run_id=self._run_id,
                episodes=len(indices),
                metric_rows=len(metrics_frame),
                report_path=str(report_path),
            )
        )
        return EvaluationResultDTO(
            report_path=report_path,
            episodes=len(indices),
            metric_rows=len(metrics_frame),
            diversity_rows=len(ged_frame),
        )

    def _score_episode(
        self,
        model: StretchBEVModel,
        experiment: ExperimentConfig,
        index: int,
        command: EvaluateCommand,
        settings: list[EvalSetting],
        steps: int,
    ) -> tuple[list[MetricRow], list[DiversityRow]]:
        episode = self._episodes.load(index)
        k = experiment.world.conditioning_len
        available = episode.length - k
        if steps > available:
            raise HorizonUnavailableError(steps, available)
        check_episode(episode, experiment, k + steps)

        dtype = next(model.parameters()).dtype
        batch = EpisodeBatch.from_episodes([index], [episode], dtype=dtype).to(self._device)
        generator = torch_generator(derive_seed(command.seed, index))
        _, sampled = model.predict(batch, steps, command.n_samples, generator)
        _, mean = model.predict(batch, steps, 1, zero_noise=True)

        postprocess = experiment.postprocess
        samples = postprocess_samples(sampled.map(lambda x: x[0]), postprocess)
        mean_rollout = postprocess_samples(mean.map(lambda x: x[0]), postprocess)[0]
        labels = episode.labels
        gt = PredictedSequence(
            segmentation=labels.segmentation[k : k + steps],
            instances=labels.instance_maps[k : k + steps],
        )
        baseline = copy_last_baseline(labels.segmentation, labels.instance_maps, k, steps)

        evaluation = experiment.evaluation
        cell_size = experiment.world.cell_size
        metrics, diversity = score_episode(
            index,
            model.variant.value,
            samples,
            mean_rollout,
            gt,
            settings,
            cell_size,
            evaluation.near_extent,
            evaluation.mode_tolerance,
        )
        metrics += score_baseline(index, baseline, gt, settings, cell_size, evaluation.near_extent)
        logger.debug("episode_scored", episode=index, rows=len(metrics))
        return metrics, diversity


class PlotReport:
    """Use case for drawing the horizon curves and GED bars of reports."""

    def __init__(self, report_repository: ReportRepository, figure_writer: FigureWriter) -> None:
        self._reports = report_repository
        self._figures = figure_writer

    def execute(self, command: PlotCommand) -> PlotResultDTO:
        """Draw figures from one or more evaluation reports.

        Rows duplicated across reports (the shared baseline) count once.

        Raises:
            DataNotFoundError: If a report is missing.
            EmptyReportError: If the reports hold no metric rows; no
                figure is written.
        """
        bundles = [self._reports.read(path) for path in command.report_paths]
        metrics = pd.concat([b.metrics for b in bundles], ignore_index=True).drop_duplicates()
        if metrics.empty:
            raise EmptyReportError(", ".join(str(p) for p in command.report_paths))
        diversity = pd.concat([b.diversity for b in bundles], ignore_index=True).drop_duplicates()
        training_horizon = next(
            (b.summary["training_horizon"] for b in bundles if "training_horizon" in b.summary),
            None,
        )

        figures = [
            self._figures.horizon_curves(
                setting_means(metrics, value),
                value,
                training_horizon,
                command.out_dir / f"horizon_{value}.png",
            )
            for value in ("iou", "vpq")
        ]
        if not diversity.empty:
            figures.append(
                self._figures.ged_bars(setting_means(diversity, "ged"), command.out_dir / "ged.png")
            )
        logger.info("figures_written", figures=[str(p) for p in figures])
        return PlotResultDTO(figures=tuple(figures))
