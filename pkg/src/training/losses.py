"""
Finite differences and the Ehrenfest-penalized loss.

    L = MSE(Y_hat, Y) + lambda / (N_targ N_T) sum_{i,k} |D Y_hat_ik - R_ik|^alpha

with R = D Y (finite_difference target) or s_Y * <RHS> (measured_rhs target).
"""
from dataclasses import dataclass

import numpy as np
import torch

from src.data import ScalerParams
from .config import PenaltyTarget, TrainConfig


@dataclass
class LossBreakdown:
    """Loss terms of one evaluation; tensors during training, floats in histories."""
    mse: torch.Tensor | float
    penalty: torch.Tensor | float
    total: torch.Tensor | float
    epoch: int = -1

    def detach(self, epoch: int | None = None) -> "LossBreakdown":
        return LossBreakdown(
            mse=float(self.mse), penalty=float(self.penalty), total=float(self.total),
            epoch=self.epoch if epoch is None else epoch,
        )

    def to_dict(self) -> dict:
        return {"epoch": self.epoch, "mse": float(self.mse), "penalty": float(self.penalty), "total": float(self.total)}


def _as_tensor(series) -> torch.Tensor:
    return series if torch.is_tensor(series) else torch.from_numpy(np.array(series, dtype=np.float64))


def finite_difference(series: torch.Tensor, dt: float) -> torch.Tensor:
    """
    Time derivative along the last axis.

    Central (y_{k+1} - y_{k-1}) / 2dt inside, first-order one-sided at both ends.

    Raises:
        ValueError: For fewer than 3 steps.
    """
    series = _as_tensor(series)
    if series.shape[-1] < 3:
        raise ValueError(f"finite_difference needs at least 3 steps, got {series.shape[-1]}")
    first = (series[..., 1:2] - series[..., 0:1]) / dt
    interior = (series[..., 2:] - series[..., :-2]) / (2.0 * dt)
    last = (series[..., -1:] - series[..., -2:-1]) / dt
    return torch.cat([first, interior, last], dim=-1)


def ehrenfest_penalty(
    pred_scaled: torch.Tensor,
    target_scaled: torch.Tensor,
    rhs_raw: torch.Tensor | None,
    scaler: ScalerParams,
    dt: float,
    lam: float,
    alpha: float,
    mode: PenaltyTarget = "finite_difference",
) -> torch.Tensor:
    """
    lambda * mean_{i,k} |D pred - R|^alpha in scaled space.

    Raises:
        ValueError: On shape mismatch, or measured_rhs mode without RHS data.
    """
    pred_scaled = _as_tensor(pred_scaled)
    if lam == 0:
        return pred_scaled.new_zeros(())
    target_scaled = _as_tensor(target_scaled)
    if pred_scaled.shape != target_scaled.shape:
        raise ValueError(f"Prediction shape {tuple(pred_scaled.shape)} != target shape {tuple(target_scaled.shape)}")

    if mode == "measured_rhs":
        if rhs_raw is None:
            raise ValueError("measured_rhs penalty needs the recorded Ehrenfest RHS series")
        reference = _as_tensor(rhs_raw) * scaler.output_scale
    elif mode == "finite_difference":
        reference = finite_difference(target_scaled, dt)
    else:
        raise ValueError(f"Unknown penalty mode {mode!r}")

    return lam * (finite_difference(pred_scaled, dt) - reference).abs().pow(alpha).mean()


def total_loss(
    predictions: torch.Tensor,
    targets: torch.Tensor,
    rhs_batch: torch.Tensor | None,
    scaler: ScalerParams,
    config: TrainConfig,
    dt: float,
    lam: float | None = None,
) -> LossBreakdown:
    """
    MSE over all (i, k) plus the Ehrenfest penalty.

    Args:
        lam: Penalty weight for this evaluation; defaults to config.lam.
    """
    predictions, targets = _as_tensor(predictions), _as_tensor(targets)
    if predictions.shape != targets.shape:
        raise ValueError(f"Prediction shape {tuple(predictions.shape)} != target shape {tuple(targets.shape)}")
    lam = config.lam if lam is None else lam
    mse = (predictions - targets).pow(2).mean()
    penalty = ehrenfest_penalty(
        predictions, targets, rhs_batch, scaler, dt, lam, config.alpha, config.penalty_target
    )
    return LossBreakdown(mse=mse, penalty=penalty, total=mse + penalty)
