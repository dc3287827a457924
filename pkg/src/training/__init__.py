"""
Training module - penalized loss, Adam and the training loop.
"""
from .config import TrainConfig
from .losses import LossBreakdown, ehrenfest_penalty, finite_difference, total_loss
from .optimizer import AdamState, adam_step
from .trainer import TrainResult, curriculum_stages, predict, train

__all__ = [
    "AdamState",
    "LossBreakdown",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "curriculum_stages",
    "ehrenfest_penalty",
    "finite_difference",
    "predict",
    "total_loss",
    "train",
]
