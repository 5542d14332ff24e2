"""Command-line entry point for multi-objective PBT experiments."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import structlog
from pydantic import ValidationError

from src.config import settings
from src.models.config_models import ExperimentConfig
from src.observability import configure_logging
from src.services.experiment_service import ExperimentError, report, run_experiment
from src.services.pbt_service import ConfigurationError

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2

logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mopbt",
        description="Multi-objective population based training experiments",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run an experiment from a JSON config")
    run_parser.add_argument("config", type=Path, help="Experiment config (JSON)")
    run_parser.add_argument("--seed", type=int, default=None, help="Override the global seed")
    run_parser.add_argument("--workers", type=int, default=None,
                            help=f"Worker pool size (default: config, then MOPBT_WORKERS={settings.workers})")
    run_parser.add_argument("--out-dir", type=Path, default=None, help="Override the output directory")
    run_parser.add_argument("--mode", choices=["sync", "async"], default=None,
                            help="Override the mode of every PBT algorithm")
    run_parser.add_argument("--parallel-runs", action="store_true",
                            help="Execute (algorithm, seed) runs concurrently")
    run_parser.add_argument("--no-report", action="store_true", help="Skip the summary report after the run")

    report_parser = subparsers.add_parser("report", help="Summarize an experiment directory")
    report_parser.add_argument("out_dir", type=Path, help="Experiment output directory")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Read the config file and apply command-line overrides.

    Raises:
        ValidationError: If the file or the overrides do not validate
        OSError: If the file cannot be read
    """
    config = ExperimentConfig.model_validate_json(args.config.read_text(encoding="utf-8"))
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "out_dir": str(args.out_dir) if args.out_dir is not None else None,
        "mode": {"sync": "synchronous", "async": "asynchronous"}.get(args.mode),
        "parallel_runs": True if args.parallel_runs else None,
    }
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return config
    return ExperimentConfig.model_validate({**config.model_dump(), **updates})


def _print_summary(summary) -> None:
    print(summary.to_string(index=False, float_format=lambda v: f"{v:.2f}"))


def command_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args)
        out_dir = config.out_dir or settings.out_dir
        manifest = run_experiment(config, out_dir=out_dir, workers=config.workers or settings.workers)
    except ValidationError as e:
        logger.error("Invalid experiment config", config=str(args.config), errors=e.errors(include_url=False))
        print(f"Invalid config {args.config}:\n{e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (ConfigurationError, OSError) as e:
        logger.error("Experiment configuration rejected", config=str(args.config), error=str(e))
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ExperimentError as e:
        logger.error("Experiment failed", error=str(e))
        print(f"Experiment failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR

    logger.info("Experiment written", out_dir=str(out_dir), runs=len(manifest["runs"]))
    if not args.no_report:
        try:
            _print_summary(report(out_dir))
        except ExperimentError as e:
            print(f"Report failed: {e}", file=sys.stderr)
            return EXIT_RUNTIME_ERROR
    return EXIT_OK


def command_report(args: argparse.Namespace) -> int:
    try:
        _print_summary(report(args.out_dir))
    except ExperimentError as e:
        logger.error("Report failed", out_dir=str(args.out_dir), error=str(e))
        print(f"Report failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, configure logging and dispatch to a command."""
    args = build_parser().parse_args(argv)
    configure_logging(settings.log_level, settings.log_format)

    handlers = {"run": command_run, "report": command_report}
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.error("Unexpected failure", error=str(e), exc_info=True)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
