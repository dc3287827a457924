"""
Architecture stability over repeated random train/test partitions.
"""
import logging
from dataclasses import dataclass, field

import pandas as pd

from src.config import Config
from src.data import Dataset, DatasetRecipe, generate_dataset
from src.errors import DataError
from src.models import ModelSpec
from src.training import TrainConfig
from .metrics import R2Report

logger = logging.getLogger(__name__)


def _column(threshold: float) -> str:
    return f"R2>{threshold:g}"


@dataclass(frozen=True)
class StabilityRow:
    seed: int
    fractions: dict[float, float]
    counts: dict[float, int]
    n_test: int

    @classmethod
    def from_report(cls, seed: int, report: R2Report) -> "StabilityRow":
        summary = report.thresholds
        return cls(
            seed=seed,
            fractions={t: s["fraction"] for t, s in summary.items()},
            counts={t: s["count"] for t, s in summary.items()},
            n_test=len(report.entries),
        )


@dataclass
class StabilityTable:
    """One row per partition seed with the fraction of test cases above each R² threshold."""
    rows: list[StabilityRow]
    thresholds: tuple[float, ...] = Config.R2_THRESHOLDS
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            ordered = [row.fractions[t] for t in sorted(self.thresholds)]
            if any(a < b for a, b in zip(ordered, ordered[1:])):
                raise DataError(f"Partition {row.seed}: fractions not nested across thresholds: {row.fractions}")

    def to_frame(self) -> pd.DataFrame:
        """Percentages per row, highest threshold first."""
        order = sorted(self.thresholds, reverse=True)
        frame = pd.DataFrame([
            {"seed": row.seed, **{_column(t): 100.0 * row.fractions[t] for t in order}}
            for row in self.rows
        ])
        return frame.reindex(columns=["seed", *(_column(t) for t in order)])

    def means(self) -> dict[float, float]:
        return {t: sum(r.fractions[t] for r in self.rows) / len(self.rows) for t in self.thresholds} if self.rows else {}

    def to_dict(self) -> dict:
        return {
            "type": "stability_table",
            "format_version": Config.FORMAT_VERSION,
            "thresholds": list(self.thresholds),
            "rows": [
                {
                    "seed": r.seed,
                    "n_test": r.n_test,
                    "fractions": {str(t): f for t, f in r.fractions.items()},
                    "counts": {str(t): c for t, c in r.counts.items()},
                }
                for r in self.rows
            ],
            "means": {str(t): m for t, m in self.means().items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityTable":
        try:
            thresholds = tuple(float(t) for t in data["thresholds"])
            rows = [
                StabilityRow(
                    seed=int(r["seed"]),
                    fractions={float(t): float(f) for t, f in r["fractions"].items()},
                    counts={float(t): int(c) for t, c in r["counts"].items()},
                    n_test=int(r["n_test"]),
                )
                for r in data["rows"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed stability table: {e}") from e
        return cls(rows=rows, thresholds=thresholds, metadata=data.get("metadata", {}))


def stability_experiment(
    source: DatasetRecipe | Dataset,
    spec: ModelSpec,
    config: TrainConfig,
    n_partitions: int = Config.STABILITY_PARTITIONS,
    threads: int = 1,
    progress: bool = True,
) -> StabilityTable:
    """
    Repeat split -> scale -> train -> evaluate for partition seeds 1..n.

    Args:
        source: Dataset, or a recipe to generate one from.
        spec: Model to build afresh for each partition.
        config: Training settings; the model seed follows config.seed.
        n_partitions: Number of random partitions.

    Returns:
        StabilityTable: One row per partition.

    Raises:
        KanEtsError: Any failure, with the failing partition seed in the message.
    """
    from src.pipeline import run_partitions

    if n_partitions < 1:
        raise ValueError(f"n_partitions must be >= 1, got {n_partitions}")
    dataset = source if isinstance(source, Dataset) else generate_dataset(source, threads=threads, progress=progress)
    spec.check_steps(dataset.recipe.n_steps)

    outcome = run_partitions(dataset, spec, config, seeds=list(range(1, n_partitions + 1)), progress=progress)
    for step in outcome["steps"]:
        logger.info(step)
    table = StabilityTable(
        rows=[StabilityRow.from_report(r.metadata["partition_seed"], r) for r in outcome["reports"]],
        metadata={"model": spec.to_dict(), "train": config.to_dict(), "recipe": dataset.recipe.to_dict()},
    )
    means = ", ".join(f"{_column(t)}: {100 * m:.1f}%" for t, m in sorted(table.means().items(), reverse=True))
    logger.info("Stability over %d partitions: %s", n_partitions, means)
    return table
