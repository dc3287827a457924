"""
CLI commands: generate, train, evaluate, stability, report.

Each command takes a resolved RunConfig and returns a summary dict whose
"written" key lists every file it produced.
"""
import json
import logging
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from src.config import Config
from src.data import Dataset, generate_dataset, load_dataset, save_dataset
from src.errors import DataError
from src.evaluation import (
    R2Report,
    StabilityTable,
    collect_overlays,
    emit_report,
    evaluate,
    load_report,
    stability_experiment,
)
from src.models import ChainModel, KanNetwork, ModelSpec, load_model, save_model
from src.pipeline import run_partitions
from src.visualization import loss_chart, write_svg
from .run_config import RunConfig

logger = logging.getLogger(__name__)


def _load_or_fail(path: Path) -> Dataset:
    if not path.exists():
        raise DataError(f"Dataset file not found: {path} (run `generate` first)")
    return load_dataset(path)


def check_model_fits(model: KanNetwork | ChainModel, n_steps: int, source: str = "checkpoint") -> None:
    """
    Reject a model whose shape cannot consume N_T-step series.

    Raises:
        DataError: Naming both the model shape and N_T.
    """
    if isinstance(model, ChainModel):
        if model.n_members != n_steps:
            raise DataError(f"{source}: chain has {model.n_members} members but the dataset has N_T={n_steps}")
        return
    architecture = model.architecture
    if architecture[0] != n_steps or architecture[-1] != n_steps:
        raise DataError(f"{source}: architecture {list(architecture)} does not match dataset N_T={n_steps}")


def _emit_all(report: R2Report | StabilityTable, stem: Path, formats, overlays=()) -> list[Path]:
    written = []
    for fmt in formats:
        written += emit_report(report, stem.with_suffix(f".{fmt}"), fmt, overlays=overlays if fmt == "svg" else ())
    return written


def _overlay_indices(test: list[int], count: int) -> list[int]:
    if count <= 0 or not test:
        return []
    picks = np.linspace(0, len(test) - 1, min(count, len(test))).round().astype(int)
    return [test[i] for i in dict.fromkeys(picks.tolist())]


def cmd_generate(config: RunConfig) -> dict:
    """Simulate the dataset described by the resolved recipe and save it."""
    started = time.perf_counter()
    dataset = generate_dataset(config.recipe, threads=config.threads)
    path = save_dataset(dataset, config.io.dataset)
    elapsed = time.perf_counter() - started
    logger.info("Generated %d samples in %.1fs -> %s", len(dataset), elapsed, path)
    return {"samples": len(dataset), "seconds": elapsed, "written": [path]}


def cmd_train(config: RunConfig) -> dict:
    """
    Split (or reuse the stored split), scale, train, and write checkpoint plus manifest.

    The dataset file is rewritten with the split and scaler used, so later
    `evaluate` runs score the same partition.
    """
    dataset = _load_or_fail(config.io.dataset)
    config.model.check_steps(dataset.recipe.n_steps)
    if dataset.split is not None and dataset.split.seed != config.seed:
        logger.info("Stored split has seed %s; drawing a new split with seed %d", dataset.split.seed, config.seed)
        dataset = replace(dataset, split=None, scaler=None)

    outcome = run_partitions(dataset, config.model, config.train, seeds=[config.seed], reuse_split=True)
    for step in outcome["steps"]:
        logger.info(step)

    model, partition = outcome["model"], outcome["partition"]
    checkpoint = save_model(model, config.io.checkpoint)
    save_dataset(partition, config.io.dataset)

    history = outcome["histories"][0]
    report = outcome["reports"][0]
    manifest = {
        "format_version": Config.FORMAT_VERSION,
        "command": "train",
        "config": config.to_dict(),
        "checkpoint": str(checkpoint),
        "dataset": str(config.io.dataset),
        "split": partition.split.to_dict(),
        "scaler": partition.scaler.to_dict(),
        "test_thresholds": {str(t): s for t, s in report.thresholds.items()},
        "roughness": report.metadata["roughness"],
        **{k: v for k, v in history.items() if k != "partition_seed"},
    }
    manifest_path = checkpoint.with_name(checkpoint.stem + "-manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    written = [checkpoint, config.io.dataset, manifest_path]
    if "svg" in config.io.formats:
        written.append(write_svg(loss_chart(history["history"]), checkpoint.with_name(checkpoint.stem + "-loss.svg")))
    return {"checkpoint": checkpoint, "manifest": manifest_path, "written": written}


def cmd_evaluate(config: RunConfig) -> dict:
    """Score the stored test split with a saved checkpoint and write report files."""
    dataset = _load_or_fail(config.io.dataset)
    if dataset.scaler is None or dataset.split is None:
        raise DataError(f"{config.io.dataset}: no stored split/scaler (run `train` first)")
    model = load_model(config.io.checkpoint)
    check_model_fits(model, dataset.recipe.n_steps, str(config.io.checkpoint))

    report = evaluate(
        model, dataset, thresholds=config.thresholds,
        metadata={
            "dataset_id": config.dataset_id,
            "model_id": config.model_id,
            "partition_seed": dataset.split.seed,
            "checkpoint": str(config.io.checkpoint),
        },
    )
    overlays = collect_overlays(model, dataset, _overlay_indices(list(dataset.split.test), config.overlays))
    stem = config.io.out_dir / f"report-{config.dataset_id}-{config.model_id}-s{dataset.split.seed}"
    written = _emit_all(report, stem, config.io.formats, overlays)
    return {"report": report, "written": written}


def _with_width(spec: ModelSpec, width: int) -> ModelSpec:
    architecture = spec.architecture
    return replace(spec, architecture=(architecture[0], width, architecture[-1]))


def cmd_stability(config: RunConfig) -> dict:
    """
    Stability table over config.n_partitions seeds, once per hidden width.

    Uses the dataset file when present, otherwise generates from the recipe.
    """
    if config.io.dataset.exists():
        source = replace(load_dataset(config.io.dataset), split=None, scaler=None)
    else:
        source = generate_dataset(config.recipe, threads=config.threads)
    specs = [_with_width(config.model, w) for w in config.widths] or [config.model]

    written, tables, frames = [], [], []
    for spec in specs:
        table = stability_experiment(source, spec, config.train, config.n_partitions, threads=config.threads)
        model_id = f"{spec.label}-{'x'.join(str(w) for w in spec.architecture)}"
        stem = config.io.out_dir / f"stability-{config.dataset_id}-{model_id}-n{config.n_partitions}"
        written += _emit_all(table, stem, config.io.formats)
        tables.append(table)
        frames.append(table.to_frame().assign(architecture=str(list(spec.architecture))))

    if len(specs) > 1:
        combined = config.io.out_dir / f"stability-{config.dataset_id}-{config.model.label}-widths.csv"
        pd.concat(frames, ignore_index=True).to_csv(combined, index=False)
        written.append(combined)
    return {"tables": tables, "written": written}


def cmd_report(config: RunConfig) -> dict:
    """Re-render a saved JSON report into the configured formats."""
    if config.io.report is None:
        raise DataError("report needs io.report (path to a saved JSON report)")
    report = load_report(config.io.report)
    stem = config.io.report.with_suffix("")
    formats = [f for f in config.io.formats if f != "json"]
    return {"report": report, "written": _emit_all(report, stem, formats)}
