"""Command-line interface for the PEFT-RLVR lab."""

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from .config import ARTIFACT_FILES, CONFIGS_DIR, OUTPUT_DIR, setup_logging
from .errors import LabError
from .harness import (
    FrontierRow,
    load_config,
    load_configs_dir,
    run_compare,
    run_eval,
    run_spectra,
    run_train,
    sweep_configs,
)
from .utilities import read_json_file

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=(
            "Parameter-efficient fine-tuning for RL with verifiable rewards, "
            "at desk scale"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Environment overrides: SEED (integer seed), OUT_DIR (output directory)."
        ),
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    out_dir_help = f"Output directory (default: OUT_DIR or {OUTPUT_DIR})"

    train = commands.add_parser(
        "train", help="Train one experiment and write its run directory"
    )
    train.add_argument(
        "--config", required=True, type=Path, help="Experiment config (JSON)"
    )

    evaluate = commands.add_parser(
        "eval", help="Evaluate a checkpoint (Avg@k, Pass@1-in-k)"
    )
    evaluate.add_argument("--ckpt", required=True, type=Path, help="Checkpoint file")
    evaluate.add_argument(
        "--config",
        type=Path,
        help="Experiment config; defaults to the config echoed in the checkpoint",
    )
    evaluate.add_argument(
        "--out-dir",
        type=Path,
        help="Where to write the CSVs (default: next to the checkpoint)",
    )

    spectra = commands.add_parser(
        "spectra", help="Spectral profile of the update between checkpoints"
    )
    spectra.add_argument(
        "--before", required=True, type=Path, help="Earlier checkpoint"
    )
    spectra.add_argument("--after", required=True, type=Path, help="Later checkpoint")
    spectra.add_argument(
        "--out-dir",
        type=Path,
        help="Where to write the CSVs (default: next to --after)",
    )
    spectra.add_argument(
        "--rank", type=int, help="Top-r for principal mass (default: adapter rank)"
    )

    compare = commands.add_parser(
        "compare", help="Train and evaluate every config in a directory"
    )
    compare.add_argument(
        "--configs",
        type=Path,
        default=Path(CONFIGS_DIR),
        help=f"Config directory (default: {CONFIGS_DIR})",
    )
    compare.add_argument("--out-dir", type=Path, help=out_dir_help)
    compare.add_argument(
        "--jobs", type=int, default=1, help="Parallel member processes"
    )

    sweep = commands.add_parser(
        "sweep", help="Compare the Cartesian product of config axes"
    )
    sweep.add_argument(
        "--config", required=True, type=Path, help="Base experiment config (JSON)"
    )
    sweep.add_argument(
        "--axis",
        action="append",
        default=[],
        metavar="KEY=V1,V2",
        help="Dotted config key and its values, e.g. adapter.rank=1,8 (repeatable)",
    )
    sweep.add_argument("--out-dir", type=Path, help=out_dir_help)
    sweep.add_argument("--jobs", type=int, default=1, help="Parallel member processes")

    return parser


def _default_out_dir(given: Path | None) -> Path:
    if given is not None:
        return given
    return Path(os.environ.get("OUT_DIR") or OUTPUT_DIR)


def _compare_exit_code(rows: Sequence[FrontierRow]) -> int:
    failed = [r for r in rows if r.exit_code != 0]
    for row in failed:
        logger.error("  ✗ %s: %s", row.name, row.status)
    return failed[0].exit_code if failed else 0


def main(argv: Sequence[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Configure logging
    setup_logging()

    if args.command is None:
        parser.print_help()
        return 0

    try:
        if args.command == "train":
            config = load_config(args.config)
            logger.info(
                "Training %s (%s, %s)...",
                config.name,
                config.adapter.kind,
                config.rlvr.variant,
            )
            result = run_train(config)
            last = result.reports[-1] if result.reports else None
            logger.info("Training complete:")
            logger.info("  Run directory: %s", result.run_dir)
            logger.info(
                "  Trainable fraction: %.4f%%", 100.0 * result.trainable_fraction
            )
            if last is not None:
                logger.info("  Final mean reward: %.3f", last.mean_reward)
            return 0

        if args.command == "eval":
            config = load_config(args.config) if args.config is not None else None
            summary = run_eval(args.ckpt, config, args.out_dir)
            logger.info("Evaluation complete:")
            logger.info("  Records: %d", summary.records)
            logger.info("  Mean avg@k: %.2f%%", summary.mean_avg_at_k)
            logger.info("  Pass@1-in-k: %.2f%%", summary.pass_rate)
            return 0

        if args.command == "spectra":
            report = run_spectra(args.before, args.after, args.out_dir, args.rank)
            logger.info("Spectral report: %d layers", len(report))
            return 0

        if args.command == "compare":
            out_dir = _default_out_dir(args.out_dir)
            rows = run_compare(load_configs_dir(args.configs), out_dir, args.jobs)
            logger.info("Frontier written to %s", out_dir / ARTIFACT_FILES["FRONTIER"])
            return _compare_exit_code(rows)

        if args.command == "sweep":
            base = read_json_file(args.config)
            base.setdefault("name", args.config.stem)
            configs = sweep_configs(base, args.axis)
            logger.info("Sweep over %d configurations", len(configs))
            out_dir = _default_out_dir(args.out_dir)
            rows = run_compare(configs, out_dir, args.jobs)
            logger.info("Frontier written to %s", out_dir / ARTIFACT_FILES["FRONTIER"])
            return _compare_exit_code(rows)

    except LabError as e:
        logger.error("%s failed: %s", args.command, e)
        return e.exit_code

    parser.print_help()
    return 1


if __name__ == "__main__":
    sys.exit(main())
