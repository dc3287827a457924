"""
Centralized configuration for the KAN-Ehrenfest time-series toolkit.
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Application configuration."""

    # Parallelism (the --threads flag takes precedence)
    THREADS: int = int(os.getenv("KAN_ETS_THREADS", "1"))

    # Output
    OUTPUT_DIR: str = os.getenv("KAN_ETS_OUTPUT_DIR", "./runs")
    LOG_LEVEL: str = os.getenv("KAN_ETS_LOG_LEVEL", "INFO")

    # Spin chain: (J_z, h_x, h_z) = 0.8 * (1, 0.25, -0.525)
    DEFAULT_SITES: int = int(os.getenv("KAN_ETS_SITES", "8"))
    MAX_SITES: int = 12
    MAX_DENSE_SITES: int = 6
    JZ: float = 0.8
    HX: float = 0.8 * 0.25
    HZ: float = 0.8 * -0.525

    # Integrator
    NORM_TOLERANCE: float = 1e-8
    NORM_BUDGET: float = 1e-9  # sub-steps are chosen against this, below the abort tolerance

    # Spline grid
    GRID_SIZE: int = 5
    SPLINE_ORDER: int = 3
    GRID_DOMAIN: tuple[float, float] = (-1.0, 1.0)

    # Optimizer
    ADAM_BETAS: tuple[float, float] = (0.9, 0.999)
    ADAM_EPS: float = 1e-8

    # Training ranges (Table-I style); TrainConfig enforces them unless overridden
    LEARNING_RATE_RANGE: tuple[float, float] = (2e-4, 1e-3)
    EPOCH_RANGE: tuple[int, int] = (3000, 9000)

    # Evaluation
    R2_THRESHOLDS: tuple[float, ...] = (0.9, 0.95, 0.98)
    TRAIN_FRACTION: float = 0.8
    STABILITY_PARTITIONS: int = 10

    # File formats
    FORMAT_VERSION: int = 1

    @classmethod
    def get_output_dir(cls, override: str | None = None) -> Path:
        """Get the resolved output directory."""
        return Path(override or cls.OUTPUT_DIR).resolve()

    @classmethod
    def get_threads(cls, override: int | None = None) -> int:
        """Worker cap: explicit flag first, then KAN_ETS_THREADS."""
        return max(1, override if override is not None else cls.THREADS)

    @classmethod
    def validate(cls) -> list[str]:
        """Validate configuration and return list of errors."""
        errors = []

        if cls.THREADS < 1:
            errors.append(f"Invalid KAN_ETS_THREADS: {cls.THREADS}. Must be >= 1.")

        if not 1 <= cls.DEFAULT_SITES <= cls.MAX_SITES:
            errors.append(
                f"Invalid KAN_ETS_SITES: {cls.DEFAULT_SITES}. Must be in 1..{cls.MAX_SITES}."
            )

        if cls.LOG_LEVEL.upper() not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            errors.append(f"Invalid KAN_ETS_LOG_LEVEL: {cls.LOG_LEVEL}.")

        return errors
