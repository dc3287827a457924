"""
Training loop: Adam on the Ehrenfest-penalized loss.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import torch
from tqdm import tqdm

from src.data import Dataset, apply_scaler
from src.errors import DataError, TrainingDivergedError
from src.models import ChainModel, KanNetwork
from .config import TrainConfig
from .losses import LossBreakdown, total_loss
from .optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

Model = KanNetwork | ChainModel
EpochCallback = Callable[[int, LossBreakdown, Model], None]


@dataclass
class TrainResult:
    """Trained model plus per-epoch diagnostics."""
    model: Model
    history: list[LossBreakdown] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return {
            "history": [h.to_dict() for h in self.history],
            "lambdas": self.lambdas,
            "wall_clock_seconds": self.wall_clock,
        }


@dataclass
class _Tensors:
    inputs: torch.Tensor
    outputs: torch.Tensor
    rhs: torch.Tensor
    amplitudes: np.ndarray


def _training_tensors(dataset: Dataset) -> _Tensors:
    if dataset.scaler is None:
        raise DataError("Dataset has no fitted scaler; call fit_scaler first")
    if dataset.split is None or not dataset.split.train:
        raise DataError("Dataset has no training split")
    train = list(dataset.split.train)
    scaler = dataset.scaler
    return _Tensors(
        inputs=torch.from_numpy(apply_scaler(dataset.inputs(train), scaler, "input")),
        outputs=torch.from_numpy(apply_scaler(dataset.outputs(train), scaler, "output")),
        rhs=torch.from_numpy(dataset.rhs(train)),
        amplitudes=dataset.amplitudes(train),
    )


def curriculum_stages(amplitudes: np.ndarray, epochs: int) -> list[tuple[int, np.ndarray]]:
    """
    Split the epoch budget over ascending amplitude stages.

    Stage j trains on every row with amplitude <= the j-th distinct amplitude;
    the last stage sees all rows and absorbs the remainder epochs.

    Returns:
        list of (stage epochs, row indices).
    """
    levels = np.unique(amplitudes)
    per_stage = max(1, epochs // len(levels))
    stages = []
    used = 0
    for j, level in enumerate(levels):
        n = epochs - used if j == len(levels) - 1 else min(per_stage, epochs - used)
        if n <= 0:
            continue
        stages.append((n, np.flatnonzero(amplitudes <= level)))
        used += n
    return stages


def _batches(rows: np.ndarray, batch_size: int | None, generator: torch.Generator) -> Iterable[np.ndarray]:
    if batch_size is None or batch_size >= len(rows):
        yield rows
        return
    order = rows[torch.randperm(len(rows), generator=generator).numpy()]
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def _snapshot(model: Model) -> dict[str, torch.Tensor]:
    return {name: value.detach().clone() for name, value in model.state_dict().items()}


def train(
    model: Model,
    dataset: Dataset,
    config: TrainConfig,
    callbacks: Iterable[EpochCallback] = (),
    progress: bool = True,
) -> TrainResult:
    """
    Fit a model on the training split of a scaled dataset.

    Full-batch by default; with identical inputs and seed the result is
    bit-identical on a given machine.

    Args:
        model: Freshly built or partially trained model; updated in place.
        dataset: Dataset carrying a fitted scaler and a split.
        config: Training hyperparameters.
        callbacks: Called as callback(epoch, breakdown, model) after every epoch.
        progress: Show a tqdm bar.

    Returns:
        TrainResult: The model and its loss history.

    Raises:
        DataError: If the dataset is not scaled and split.
        TrainingDivergedError: If the loss or a gradient becomes non-finite;
            the model is restored to the last good epoch before raising.
    """
    data = _training_tensors(dataset)
    if config.penalty_target == "measured_rhs" and not torch.isfinite(data.rhs).all():
        raise DataError("measured_rhs penalty selected but the recorded RHS series is not finite")

    params = [p for p in model.parameters() if p.requires_grad]
    state = AdamState.create(params, config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)
    rows = np.arange(len(data.amplitudes))
    stages = curriculum_stages(data.amplitudes, config.epochs) if config.curriculum else [(config.epochs, rows)]

    logger.info(
        "Training %s (%d parameters) on %d samples for %d epochs, lr=%g, lambda=%g, alpha=%g, target=%s",
        type(model).__name__, sum(p.numel() for p in params), len(rows), config.epochs,
        config.learning_rate, config.lam, config.alpha, config.penalty_target,
    )

    result = TrainResult(model=model)
    last_good = _snapshot(model)
    started = time.perf_counter()
    bar = tqdm(total=config.epochs, desc="train", unit="epoch", disable=not progress)
    epoch = 0
    try:
        for stage_epochs, stage_rows in stages:
            if config.curriculum:
                logger.info("Curriculum stage: %d samples up to A=%g", len(stage_rows), data.amplitudes[stage_rows].max())
            for _ in range(stage_epochs):
                lam = config.lambda_at(epoch)
                breakdown = _run_epoch(model, data, stage_rows, params, state, config, dataset, lam, epoch, generator)
                if not np.isfinite(breakdown.total):
                    model.load_state_dict(last_good)
                    raise TrainingDivergedError(
                        f"Loss became {breakdown.total} at epoch {epoch} "
                        f"(mse={breakdown.mse}, penalty={breakdown.penalty})",
                        epoch=epoch, last_good_state=last_good,
                    )
                last_good = _snapshot(model)
                result.history.append(breakdown)
                result.lambdas.append(lam)
                for callback in callbacks:
                    callback(epoch, breakdown, model)
                bar.set_postfix(loss=f"{breakdown.total:.3e}")
                bar.update()
                epoch += 1
    except TrainingDivergedError as e:
        if e.last_good_state is None:
            model.load_state_dict(last_good)
            e.last_good_state = last_good
        if e.epoch < 0:
            e.epoch = epoch
        logger.error("Training diverged at epoch %d: %s", e.epoch, e)
        raise
    finally:
        bar.close()

    result.wall_clock = time.perf_counter() - started
    final = result.history[-1]
    logger.info("Training done in %.1fs: mse=%.4e penalty=%.4e", result.wall_clock, final.mse, final.penalty)
    return result


def _run_epoch(
    model: Model,
    data: _Tensors,
    rows: np.ndarray,
    params: list[torch.Tensor],
    state: AdamState,
    config: TrainConfig,
    dataset: Dataset,
    lam: float,
    epoch: int,
    generator: torch.Generator,
) -> LossBreakdown:
    """One pass over the rows; returns the sample-weighted loss before the updates."""
    mse = penalty = total = 0.0
    for batch in _batches(rows, config.batch_size, generator):
        index = torch.from_numpy(batch)
        predictions = model(data.inputs[index])
        terms = total_loss(
            predictions, data.outputs[index], data.rhs[index], dataset.scaler, config, dataset.dt, lam
        )
        if not torch.isfinite(terms.total):
            return terms.detach(epoch)
        grads = torch.autograd.grad(terms.total, params)
        adam_step(params, grads, state, config.learning_rate, epoch=epoch)
        weight = len(batch) / len(rows)
        mse += weight * float(terms.mse)
        penalty += weight * float(terms.penalty)
        total += weight * float(terms.total)
    return LossBreakdown(mse=mse, penalty=penalty, total=total, epoch=epoch)


@torch.no_grad()
def predict(model: Model, dataset: Dataset, indices: list[int] | None = None) -> np.ndarray:
    """Scaled predictions for the given samples (all samples by default)."""
    if dataset.scaler is None:
        raise DataError("Dataset has no fitted scaler")
    inputs = torch.from_numpy(apply_scaler(dataset.inputs(indices), dataset.scaler, "input"))
    return model(inputs).numpy()
