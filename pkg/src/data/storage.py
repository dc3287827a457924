"""
Dataset persistence as one self-describing JSON document.

Floats go through json's repr-based encoding, the shortest string that
round-trips to the identical float64, so save -> load is exact.
"""
import json
import logging
from pathlib import Path

import numpy as np

from src.config import Config
from src.errors import DataError
from src.physics import DriveSignal, TrajectorySample
from .datasets import Dataset, DatasetRecipe, ScalerParams, Split

logger = logging.getLogger(__name__)

SECTIONS = ["format_version", "recipe", "dt", "samples", "scaler", "split"]


def dataset_to_dict(dataset: Dataset) -> dict:
    """Serialize a dataset to plain JSON types."""
    return {
        "format_version": Config.FORMAT_VERSION,
        "recipe": dataset.recipe.to_dict(),
        "dt": dataset.dt,
        "samples": [
            {
                "amplitude": s.drive.amplitude,
                "omega": s.drive.omega,
                "input": s.drive.samples.tolist(),
                "output": s.output.tolist(),
                "ehrenfest_rhs": s.ehrenfest_rhs.tolist(),
            }
            for s in dataset.samples
        ],
        "scaler": dataset.scaler.to_dict() if dataset.scaler else None,
        "split": dataset.split.to_dict() if dataset.split else None,
    }


def dataset_from_dict(data: dict, source: str = "<memory>") -> Dataset:
    """
    Rebuild a dataset, validating version, sections and series lengths.

    Raises:
        DataError: On version mismatch, missing sections or inconsistent lengths.
    """
    missing = [key for key in SECTIONS if key not in data]
    if missing:
        raise DataError(f"{source}: missing section(s) {', '.join(repr(m) for m in missing)}")
    if data["format_version"] != Config.FORMAT_VERSION:
        raise DataError(
            f"{source}: format_version {data['format_version']} is not supported (expected {Config.FORMAT_VERSION})"
        )

    try:
        recipe = DatasetRecipe.from_dict(data["recipe"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{source}: malformed section 'recipe': {e}") from e

    try:
        dt = float(data["dt"])
    except (TypeError, ValueError) as e:
        raise DataError(f"{source}: malformed section 'dt': {e}") from e
    if not np.isclose(dt, recipe.dt, rtol=1e-9, atol=0.0):
        raise DataError(f"{source}: stored dt={dt} does not match the recipe time step {recipe.dt}")
    samples = []
    for i, raw in enumerate(data["samples"]):
        try:
            series = {key: np.asarray(raw[key], dtype=np.float64) for key in ("input", "output", "ehrenfest_rhs")}
        except KeyError as e:
            raise DataError(f"{source}: sample {i} is missing field {e}") from e
        lengths = {key: len(v) for key, v in series.items()}
        if set(lengths.values()) != {recipe.n_steps}:
            raise DataError(f"{source}: sample {i} has series lengths {lengths}, expected {recipe.n_steps}")
        for array in series.values():
            array.flags.writeable = False
        drive = DriveSignal(
            amplitude=float(raw["amplitude"]), omega=float(raw["omega"]), dt=dt, samples=series["input"]
        )
        samples.append(TrajectorySample(drive=drive, output=series["output"], ehrenfest_rhs=series["ehrenfest_rhs"]))

    if len(samples) != recipe.n_samples:
        raise DataError(f"{source}: {len(samples)} samples stored, recipe describes {recipe.n_samples}")

    try:
        scaler = ScalerParams(**data["scaler"]) if data["scaler"] is not None else None
    except TypeError as e:
        raise DataError(f"{source}: malformed section 'scaler': {e}") from e
    split = None
    if data["split"] is not None:
        try:
            split = Split(
                train=tuple(int(i) for i in data["split"]["train"]),
                test=tuple(int(i) for i in data["split"]["test"]),
                seed=data["split"].get("seed"),
            )
        except (KeyError, TypeError, AttributeError) as e:
            raise DataError(f"{source}: malformed section 'split': {e}") from e
    return Dataset(recipe=recipe, samples=tuple(samples), scaler=scaler, split=split)


def save_dataset(dataset: Dataset, path: str | Path) -> Path:
    """Write a dataset JSON file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(dataset_to_dict(dataset), f)
    logger.info("Saved dataset with %d samples to %s", len(dataset), path)
    return path


def load_dataset(path: str | Path) -> Dataset:
    """
    Load a dataset JSON file.

    Raises:
        DataError: If the file is missing, truncated or malformed.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: {_describe_truncation(text, e.pos)} ({e.msg})") from e
    if not isinstance(data, dict):
        raise DataError(f"{path}: top-level JSON value must be an object")
    return dataset_from_dict(data, source=str(path))


def _describe_truncation(text: str, position: int) -> str:
    """Name the section a parse failure fell into and the sections never reached."""
    started = [key for key in SECTIONS if 0 <= text.find(f'"{key}"') < position]
    current = started[-1] if started else None
    unreached = [key for key in SECTIONS if key not in started]
    if current is None:
        return "file is empty or not JSON; missing section 'format_version'"
    message = f"file is truncated or malformed in section '{current}'"
    if unreached:
        message += f"; missing section(s) {', '.join(repr(k) for k in unreached)}"
    return message
