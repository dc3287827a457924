"""
CLI module - run configuration and commands.
"""
from .commands import check_model_fits, cmd_evaluate, cmd_generate, cmd_report, cmd_stability, cmd_train
from .main import build_parser, main
from .run_config import PRESETS, IoPaths, Preset, RunConfig, default_architecture, load_run_config

__all__ = [
    "IoPaths",
    "PRESETS",
    "Preset",
    "RunConfig",
    "build_parser",
    "check_model_fits",
    "cmd_evaluate",
    "cmd_generate",
    "cmd_report",
    "cmd_stability",
    "cmd_train",
    "default_architecture",
    "load_run_config",
    "main",
]
