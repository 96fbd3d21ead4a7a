"""Command-line entry point: ``dcw backtest``, ``dcw synth`` and ``dcw report``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from dcw._config import get_config_loader
from dcw._exceptions import ConfigError, DataError, DCWError, NumericalError, PipelineError

logger = logging.getLogger("dcw")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def exit_code(error: DCWError) -> int:
    """Map a toolkit error to its process exit code.

    Pipeline errors map through the error they wrap.
    """
    if isinstance(error, PipelineError):
        error = error.cause
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return 1


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per pipeline entry."""
    parser = argparse.ArgumentParser(
        prog="dcw", description="Realized-covariance portfolio backtests with exposure constraints."
    )
    parser.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging verbosity (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    backtest = commands.add_parser("backtest", help="run a rolling backtest from a JSON config")
    backtest.add_argument("--config", required=True, type=Path, help="backtest config file")
    backtest.add_argument("--from-cov", type=Path, help="precomputed covariance series (skips ticks)")
    backtest.add_argument("--out", type=Path, help="output directory (overrides the config)")
    backtest.add_argument("--threads", type=int, help="worker threads (overrides the config)")

    synth = commands.add_parser("synth", help="generate a synthetic tick dataset")
    synth.add_argument("--spec", required=True, type=Path, help="synthetic market spec file")
    synth.add_argument("--out", required=True, type=Path, help="output directory")

    report = commands.add_parser("report", help="re-emit tables from a finished backtest")
    report.add_argument("--in", dest="in_dir", required=True, type=Path, help="backtest output directory")
    report.add_argument("--out", type=Path, help="directory for the tables (default: --in)")
    return parser


def _run(args: argparse.Namespace) -> None:
    from dcw._backtest import run_backtest
    from dcw._report import reemit_reports
    from dcw._synthetic import generate_synthetic

    loader = get_config_loader()
    if args.command == "backtest":
        if args.threads is not None and args.threads < 1:
            raise ConfigError("must be at least 1", "threads")
        cfg = loader.load_backtest_config(args.config)
        result = run_backtest(cfg, from_cov=args.from_cov, out=args.out, threads=args.threads)
        print(f"Wrote results to {result.output_dir}")
    elif args.command == "synth":
        spec = loader.load_synthetic_spec(args.spec)
        dataset = generate_synthetic(spec, args.out)
        print(f"Wrote synthetic dataset to {args.out}")
        print(f"Run it with: dcw backtest --config {dataset.config_path}")
    elif args.command == "report":
        files = reemit_reports(args.in_dir, args.out)
        print(f"Re-emitted {len(files)} file(s)")


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line.

    Returns:
        Exit code: 0 on success, 2 configuration error, 3 data error, 4 numerical failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except DCWError as e:
        logger.error("%s", e)
        return exit_code(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
