"""
Writing and re-reading R² reports and stability tables.
"""
import json
import logging
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import pandas as pd

from src.errors import DataError
from src.visualization import overlay_chart, r2_chart, stability_chart, write_svg
from .metrics import Overlay, R2Entry, R2Report
from .stability import StabilityTable

logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "json", "svg"]


def _frame(report: R2Report | StabilityTable) -> pd.DataFrame:
    return report.to_frame()


def emit_report(
    report: R2Report | StabilityTable,
    path: str | Path,
    fmt: ReportFormat | None = None,
    overlays: Sequence[Overlay] = (),
) -> list[Path]:
    """
    Write a report as CSV, JSON or SVG.

    Args:
        report: R² report or stability table.
        path: Output file; the format defaults to its suffix.
        fmt: Explicit format.
        overlays: Samples to plot as extra SVGs next to `path`.

    Returns:
        list[Path]: Every file written.

    Raises:
        DataError: On an unknown format or an unwritable path.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt not in ("csv", "json", "svg"):
        raise DataError(f"Unknown report format {fmt!r}; use csv, json or svg")

    written = []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            _frame(report).to_csv(path, index=False)
        elif fmt == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        written.append(path)
    except OSError as e:
        raise DataError(f"Cannot write report to {path}: {e}") from e

    if fmt == "svg":
        if isinstance(report, StabilityTable):
            fig = stability_chart(_frame(report))
        else:
            fig = r2_chart(_frame(report).astype({"r2": float}))
        written[:] = [write_svg(fig, path)]

    for i, overlay in enumerate(overlays):
        target = path.with_name(f"{path.stem}_overlay_{i:02d}.svg")
        written.append(write_svg(overlay_chart(overlay.drive, overlay.target, overlay.prediction, overlay.label), target))

    logger.info("Wrote %s", ", ".join(str(p) for p in written))
    return written


def load_report(path: str | Path) -> R2Report | StabilityTable:
    """Read a JSON report written by emit_report."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"Report not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: report is not valid JSON ({e.msg})") from e
    kind = data.get("type")
    if kind == "r2_report":
        return R2Report.from_dict(data)
    if kind == "stability_table":
        return StabilityTable.from_dict(data)
    raise DataError(f"{path}: unknown report type {kind!r}")


def read_report_csv(path: str | Path) -> list[R2Entry]:
    """Parse the (omega, amplitude, r2) CSV back into entries."""
    frame = pd.read_csv(path)
    missing = {"omega", "amplitude", "r2"} - set(frame.columns)
    if missing:
        raise DataError(f"{path}: missing column(s) {sorted(missing)}")
    return [
        R2Entry(float(row.omega), float(row.amplitude), None if np.isnan(row.r2) else float(row.r2))
        for row in frame.itertuples(index=False)
    ]
