"""
Command-line entry point.

    python app.py generate --preset 1 --out runs
    python app.py train --config run.json --seed 3
    python app.py evaluate --config run.json
    python app.py stability --preset 1 --threads 4
    python app.py report --config run.json
"""
import argparse
import logging
import sys

import torch

from src.config import Config
from src.errors import ConfigError, KanEtsError
from .commands import cmd_evaluate, cmd_generate, cmd_report, cmd_stability, cmd_train
from .run_config import PRESETS, load_run_config

logger = logging.getLogger(__name__)

COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "stability": cmd_stability,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kan-ets",
        description="Learn driven spin-chain magnetization series with Ehrenfest-regularized KANs.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--preset", type=int, choices=sorted(PRESETS), help="dataset preset")
    parser.add_argument("--seed", type=int, help="partition and model seed")
    parser.add_argument("--sites", type=int, help="spin chain length")
    parser.add_argument("--threads", type=int, help="worker cap (default: KAN_ETS_THREADS)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: KAN_ETS_OUTPUT_DIR)")
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Run one command and return its exit code.

    Returns:
        int: 0 on success, 2 config error, 3 data error, 4 training
        divergence, 5 simulation failure.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=Config.LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        problems = Config.validate()
        if problems:
            raise ConfigError("; ".join(problems))
        config = load_run_config(
            args.config, preset=args.preset, seed=args.seed, sites=args.sites,
            threads=args.threads, out=args.out,
        )
        torch.set_num_threads(config.threads)
        summary = COMMANDS[args.command](config)
    except KanEtsError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    for path in summary["written"]:
        print(path)
    return 0
