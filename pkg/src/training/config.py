"""
Training hyperparameters.
"""
from dataclasses import asdict, dataclass
from typing import Literal

from src.config import Config
from src.errors import ConfigError

PenaltyTarget = Literal["finite_difference", "measured_rhs"]
LambdaSchedule = Literal["constant", "exponential"]


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimizer, penalty and schedule settings.

    Learning rate and epoch count are held to the documented ranges and alpha to
    {2, 4} unless enforce_ranges is False.
    """
    learning_rate: float = 5e-4
    epochs: int = 3000
    lam: float = 1.0
    alpha: float = 2.0
    penalty_target: PenaltyTarget = "finite_difference"
    lambda_schedule: LambdaSchedule = "constant"
    lambda_decay: float = 1.0
    batch_size: int | None = None  # None: full batch
    seed: int = 0
    curriculum: bool = False
    enforce_ranges: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.penalty_target not in ("finite_difference", "measured_rhs"):
            raise ConfigError(f"Unknown penalty_target {self.penalty_target!r}")
        if self.lambda_schedule not in ("constant", "exponential"):
            raise ConfigError(f"Unknown lambda_schedule {self.lambda_schedule!r}")
        if not 0.0 < self.lambda_decay <= 1.0:
            raise ConfigError(f"lambda_decay must lie in (0, 1], got {self.lambda_decay}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")

        if self.enforce_ranges:
            lo, hi = Config.LEARNING_RATE_RANGE
            if not lo <= self.learning_rate <= hi:
                raise ConfigError(f"learning_rate {self.learning_rate} outside [{lo}, {hi}]; set enforce_ranges=false to override")
            lo, hi = Config.EPOCH_RANGE
            if not lo <= self.epochs <= hi:
                raise ConfigError(f"epochs {self.epochs} outside [{lo}, {hi}]; set enforce_ranges=false to override")
            if self.alpha not in (2, 4):
                raise ConfigError(f"alpha {self.alpha} not in {{2, 4}}; set enforce_ranges=false to override")

    def lambda_at(self, epoch: int) -> float:
        """Scheduled penalty weight for a 0-based epoch; non-increasing in epoch."""
        if self.lambda_schedule == "exponential":
            return self.lam * self.lambda_decay ** epoch
        return self.lam

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown train field(s): {', '.join(sorted(unknown))}")
        return cls(**data)
