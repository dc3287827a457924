"""
R² scores, threshold summaries and smoothness of predicted series.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from sklearn import metrics

from src.config import Config
from src.data import Dataset, apply_scaler
from src.errors import DataError
from src.models import ChainModel, KanNetwork
from src.training import predict

logger = logging.getLogger(__name__)


def r2_score(target: NDArray, pred: NDArray) -> float | None:
    """
    Coefficient of determination 1 - SS_res / SS_tot.

    Returns:
        float | None: None when the target is constant (R² undefined).

    Raises:
        ValueError: On empty or mismatched inputs.
    """
    target = np.asarray(target, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if target.shape != pred.shape:
        raise ValueError(f"Target shape {target.shape} != prediction shape {pred.shape}")
    if target.size == 0:
        raise ValueError("r2_score needs at least one value")
    if np.all(target == target.flat[0]):
        return None
    return float(metrics.r2_score(target.ravel(), pred.ravel()))


def roughness(predictions: NDArray) -> float:
    """Mean over samples and interior steps of the squared second difference."""
    predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    if predictions.shape[-1] < 3:
        raise ValueError("roughness needs at least 3 steps")
    return float(np.mean(np.diff(predictions, n=2, axis=-1) ** 2))


@dataclass(frozen=True)
class R2Entry:
    omega: float
    amplitude: float
    r2: float | None
    index: int | None = None

    def passes(self, threshold: float) -> bool:
        return self.r2 is not None and self.r2 > threshold


def summarize_thresholds(entries: Sequence[R2Entry], thresholds: Sequence[float]) -> dict[float, dict]:
    """Count and fraction of entries strictly above each threshold; undefined scores never pass."""
    n = len(entries)
    summary = {}
    for t in sorted(thresholds):
        count = sum(e.passes(t) for e in entries)
        summary[float(t)] = {"count": count, "fraction": count / n if n else 0.0}
    return summary


@dataclass
class R2Report:
    """Per-test-sample R² with threshold summaries."""
    entries: list[R2Entry]
    threshold_values: tuple[float, ...] = Config.R2_THRESHOLDS
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for e in self.entries:
            if e.r2 is not None and e.r2 > 1.0 + 1e-12:
                raise DataError(f"R² {e.r2} > 1 for omega={e.omega}, A={e.amplitude}")

    @property
    def thresholds(self) -> dict[float, dict]:
        return summarize_thresholds(self.entries, self.threshold_values)

    @property
    def undefined(self) -> int:
        return sum(e.r2 is None for e in self.entries)

    def by_amplitude(self) -> dict[float, dict[float, dict]]:
        """Threshold summaries restricted to each amplitude."""
        groups: dict[float, list[R2Entry]] = defaultdict(list)
        for e in self.entries:
            groups[e.amplitude].append(e)
        return {a: summarize_thresholds(groups[a], self.threshold_values) for a in sorted(groups)}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"omega": [e.omega for e in self.entries],
             "amplitude": [e.amplitude for e in self.entries],
             "r2": [e.r2 for e in self.entries]},
            columns=["omega", "amplitude", "r2"],
        )

    def to_dict(self) -> dict:
        return {
            "type": "r2_report",
            "format_version": Config.FORMAT_VERSION,
            "entries": [
                {"omega": e.omega, "amplitude": e.amplitude, "r2": e.r2, "index": e.index} for e in self.entries
            ],
            "thresholds": {str(t): s for t, s in self.thresholds.items()},
            "by_amplitude": {
                str(a): {str(t): s for t, s in summary.items()} for a, summary in self.by_amplitude().items()
            },
            "undefined": self.undefined,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "R2Report":
        try:
            entries = [
                R2Entry(float(e["omega"]), float(e["amplitude"]),
                        None if e["r2"] is None else float(e["r2"]), e.get("index"))
                for e in data["entries"]
            ]
            thresholds = tuple(sorted(float(t) for t in data.get("thresholds", {}))) or Config.R2_THRESHOLDS
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed R² report: {e}") from e
        return cls(entries=entries, threshold_values=thresholds, metadata=data.get("metadata", {}))


@dataclass(frozen=True)
class Overlay:
    """One test sample in scaled space, for prediction plots."""
    label: str
    drive: NDArray[np.float64]
    target: NDArray[np.float64]
    prediction: NDArray[np.float64]


def evaluate(
    model: KanNetwork | ChainModel,
    dataset: Dataset,
    test_indices: Sequence[int] | None = None,
    thresholds: Sequence[float] = Config.R2_THRESHOLDS,
    metadata: dict | None = None,
) -> R2Report:
    """
    Score every test sample on scaled series.

    Args:
        test_indices: Samples to score; defaults to the dataset's test split.

    Raises:
        DataError: If no scaler is fitted or the test set is empty.
    """
    if dataset.scaler is None:
        raise DataError("Dataset has no fitted scaler")
    if test_indices is None:
        test_indices = list(dataset.split.test) if dataset.split else []
    test_indices = list(test_indices)
    if not test_indices:
        raise DataError("Cannot evaluate on an empty test set")

    predictions = predict(model, dataset, test_indices)
    targets = apply_scaler(dataset.outputs(test_indices), dataset.scaler, "output")
    omegas, amplitudes = dataset.omegas(test_indices), dataset.amplitudes(test_indices)

    entries = [
        R2Entry(float(omegas[j]), float(amplitudes[j]), r2_score(targets[j], predictions[j]), int(i))
        for j, i in enumerate(test_indices)
    ]
    report = R2Report(
        entries=entries,
        threshold_values=tuple(sorted(float(t) for t in thresholds)),
        metadata={**(metadata or {}), "n_test": len(entries), "roughness": roughness(predictions)},
    )
    if report.undefined:
        logger.warning("%d test sample(s) have a constant target; R² undefined", report.undefined)
    summary = ", ".join(f"R2>{t}: {s['count']}/{len(entries)}" for t, s in report.thresholds.items())
    logger.info("Evaluated %d test samples (%s)", len(entries), summary)
    return report


def collect_overlays(
    model: KanNetwork | ChainModel, dataset: Dataset, indices: Sequence[int]
) -> list[Overlay]:
    """Scaled drive, target and prediction for selected samples."""
    indices = list(indices)
    if not indices:
        return []
    predictions = predict(model, dataset, indices)
    drives = apply_scaler(dataset.inputs(indices), dataset.scaler, "input")
    targets = apply_scaler(dataset.outputs(indices), dataset.scaler, "output")
    omegas, amplitudes = dataset.omegas(indices), dataset.amplitudes(indices)
    return [
        Overlay(f"A={amplitudes[j]:g}, omega={omegas[j]:.4g}", drives[j], targets[j], predictions[j])
        for j in range(len(indices))
    ]
