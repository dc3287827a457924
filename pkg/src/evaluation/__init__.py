"""
Evaluation module - R² reports, stability tables and report files.
"""
from .metrics import (
    Overlay,
    R2Entry,
    R2Report,
    collect_overlays,
    evaluate,
    r2_score,
    roughness,
    summarize_thresholds,
)
from .reports import emit_report, load_report, read_report_csv
from .stability import StabilityRow, StabilityTable, stability_experiment

__all__ = [
    "Overlay",
    "R2Entry",
    "R2Report",
    "StabilityRow",
    "StabilityTable",
    "collect_overlays",
    "emit_report",
    "evaluate",
    "load_report",
    "r2_score",
    "read_report_csv",
    "roughness",
    "stability_experiment",
    "summarize_thresholds",
]
