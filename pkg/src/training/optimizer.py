"""
Adam on explicit (parameter, gradient) lists, backed by torch.optim.Adam.
"""
from dataclasses import dataclass
from typing import Sequence

import torch

from src.config import Config
from src.errors import TrainingDivergedError


@dataclass
class AdamState:
    """Moment accumulators and step counter (held by the wrapped torch optimizer)."""
    optimizer: torch.optim.Adam

    @classmethod
    def create(cls, params: Sequence[torch.Tensor], lr: float) -> "AdamState":
        return cls(torch.optim.Adam(list(params), lr=lr, betas=Config.ADAM_BETAS, eps=Config.ADAM_EPS))

    @property
    def step(self) -> int:
        states = list(self.optimizer.state.values())
        return int(states[0]["step"]) if states else 0

    def moments(self, param: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(first moment, second moment) of one parameter; zeros before the first step."""
        state = self.optimizer.state.get(param)
        if not state:
            return torch.zeros_like(param), torch.zeros_like(param)
        return state["exp_avg"], state["exp_avg_sq"]


def adam_step(
    params: Sequence[torch.Tensor],
    grads: Sequence[torch.Tensor],
    state: AdamState,
    lr: float,
    epoch: int | None = None,
) -> tuple[Sequence[torch.Tensor], AdamState]:
    """
    One bias-corrected Adam update, in place.

    Raises:
        ValueError: If a gradient shape does not match its parameter.
        TrainingDivergedError: If any gradient is non-finite.
    """
    for i, (p, g) in enumerate(zip(params, grads, strict=True)):
        if p.shape != g.shape:
            raise ValueError(f"Gradient {i} has shape {tuple(g.shape)}, parameter has {tuple(p.shape)}")
        if not torch.isfinite(g).all():
            where = f"epoch {epoch}" if epoch is not None else f"step {state.step + 1}"
            raise TrainingDivergedError(f"Non-finite gradient for parameter {i} at {where}", epoch=epoch if epoch is not None else -1)
    for p, g in zip(params, grads):
        p.grad = g.detach().clone()
    for group in state.optimizer.param_groups:
        group["lr"] = lr
    state.optimizer.step()
    return params, state
