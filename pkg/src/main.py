#!/usr/bin/env python3
"""
Main entry point for the RAHN QoS prediction toolkit.

Subcommands: reputation, train, evaluate, sweep, gen-fixture.
Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data error,
4 training divergence, 5 incompatible checkpoint.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.commands import (
    cmd_evaluate,
    cmd_gen_fixture,
    cmd_reputation,
    cmd_sweep,
    cmd_train,
    load_grid,
)
from src.config import load_experiment_config
from src.evaluation.experiment import GRID_PRESETS
from src.models.experiment import ExperimentConfig
from src.utils import RahnError, configure_logging, get_logger

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON experiment config file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config value by dotted key, e.g. model.d=8 (repeatable)",
    )
    common.add_argument("--seed", type=int, default=None, help="Base seed (wins over config and RAHN_SEED)")
    common.add_argument("--log-level", choices=LOG_LEVELS, default=None, help="Console log level")

    parser = argparse.ArgumentParser(
        prog="rahn",
        description="Reputation-aware hourglass network for web service QoS prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("reputation", parents=[common], help="Compute user and service reputations")

    train = sub.add_parser("train", parents=[common], help="Train a model and save a checkpoint")
    train.add_argument("--checkpoint", type=str, default=None, help="Checkpoint path to write")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Score a checkpoint with the full protocol")
    evaluate.add_argument("--checkpoint", type=str, default=None, help="Checkpoint path to read")

    sweep = sub.add_parser("sweep", parents=[common], help="Run a (N, PE, d, density) grid")
    sweep.add_argument("--grid", type=str, default=None, help="JSON grid file")
    sweep.add_argument("--grid-preset", choices=sorted(GRID_PRESETS), default=None, help="Built-in grid")

    fixture = sub.add_parser("gen-fixture", parents=[common], help="Write a synthetic QoS fixture")
    fixture.add_argument("--out-dir", type=str, default="data/fixture", help="Output directory")
    fixture.add_argument("--users", type=int, default=50)
    fixture.add_argument("--services", type=int, default=100)
    fixture.add_argument("--rank", type=int, default=3)
    fixture.add_argument("--noise", type=float, default=0.05)
    fixture.add_argument("--density", type=float, default=0.2)
    fixture.add_argument("--regions", type=int, default=4)

    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Resolve the config and set up logging from it."""
    config = load_experiment_config(args.config, overrides=args.overrides, seed=args.seed)
    configure_logging(
        log_dir=config.logging.log_dir,
        level=args.log_level or config.logging.level,
        max_file_size_mb=config.logging.max_file_size_mb,
        backup_count=config.logging.backup_count,
    )
    return config


def run(args: argparse.Namespace) -> int:
    """Dispatch one parsed command; returns its exit code."""
    config = resolve_config(args)
    logger = get_logger("main")
    logger.info(f"rahn {args.command} (seed {config.protocol.seed})")

    if args.command == "reputation":
        path = cmd_reputation(config)
        print(f"Reputations written to {path}")
    elif args.command == "train":
        report = cmd_train(config, checkpoint=args.checkpoint)
        final = report.epoch_losses[-1] if report.epoch_losses else report.initial_loss
        print(f"NPEd={report.npe_label} trained: final loss {final:.6f}")
    elif args.command == "evaluate":
        cmd_evaluate(config, checkpoint=args.checkpoint)
    elif args.command == "sweep":
        grid = load_grid(args.grid, args.grid_preset)
        result = cmd_sweep(config, grid)
        print(f"Sweep finished: {len(result.cells) - result.n_failed}/{len(result.cells)} cells succeeded")
        if result.cells and result.n_failed == len(result.cells):
            return 1
    elif args.command == "gen-fixture":
        out = cmd_gen_fixture(
            args.out_dir,
            n_users=args.users,
            n_services=args.services,
            rank=args.rank,
            noise_std=args.noise,
            density=args.density,
            n_regions=args.regions,
            seed=config.protocol.seed,
        )
        print(f"Fixture written to {out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code
    """
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except RahnError as e:
        message = " ".join(str(e).split())
        print(f"error: {message}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
