"""
Pipeline module - LangGraph workflow for split/train/evaluate runs.
"""
from .workflow import build_workflow, get_workflow, run_partitions

__all__ = ["build_workflow", "get_workflow", "run_partitions"]
