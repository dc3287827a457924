"""
Exception hierarchy shared by all modules.

The CLI maps each family to its own exit code.
"""


class KanEtsError(Exception):
    """Base class for toolkit errors."""

    exit_code: int = 1


class ConfigError(KanEtsError, ValueError):
    """Invalid run configuration, preset conflict or malformed flag."""

    exit_code = 2


class DataError(KanEtsError, ValueError):
    """Malformed, truncated or inconsistent dataset / checkpoint data."""

    exit_code = 3


class TrainingDivergedError(KanEtsError):
    """Total loss became NaN/Inf, or a gradient was non-finite."""

    exit_code = 4

    def __init__(self, message: str, epoch: int, last_good_state: dict | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.last_good_state = last_good_state


class SimulationError(KanEtsError):
    """The spin-chain integrator violated its norm tolerance."""

    exit_code = 5
