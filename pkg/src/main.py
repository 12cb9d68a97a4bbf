import argparse
import logging
import sys
from datetime import date
from typing import List, Optional

from pydantic import ValidationError

from src.core.errors import ConfigError, ToolkitError
from src.core.logs import announce, configure_logging
from src.pipeline.commands import cmd_cv, cmd_diagnose, cmd_ingest, cmd_run
from src.pipeline.config import load_config

logger = logging.getLogger(__name__)


def _iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsa", description="Time-series analysis and forecasting toolkit")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="Aggregate a dated event log into a series CSV")
    ingest.add_argument("--input", required=True, help="Event CSV with a Date column (MM/DD/YYYY)")
    ingest.add_argument("--output", required=True, help="Series CSV to write")
    ingest.add_argument("--step-months", type=int, default=12)
    ingest.add_argument("--origin", type=_iso_date, default=None, help="First interval start (default: month of first event)")

    diagnose = sub.add_parser("diagnose", help="ADF test, correlograms and decomposition")
    diagnose.add_argument("--input", required=True, help="Series CSV")
    diagnose.add_argument("--output-dir", required=True)
    diagnose.add_argument("--period", type=int, default=None, help="Decomposition period; omitted skips decomposition")
    diagnose.add_argument("--max-lag", type=int, default=20)
    diagnose.add_argument("--difference", action="store_true", help="Diagnose the once-differenced series")

    for name, help_text in (("run", "Fit, forecast the test split and score it"), ("cv", "Rank the configured grid by expanding-window CV")):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("--config", required=True, help="INI pipeline config")
        command.add_argument("--input", required=True, help="Series CSV, or event CSV when [series] source = events")
        command.add_argument("--output-dir", required=True)
        command.add_argument("--seed", type=int, default=None, help="Overrides [run] seed")
    return parser


def run_command(args: argparse.Namespace) -> None:
    if args.command == "ingest":
        cmd_ingest(args.input, args.step_months, args.output, args.origin)
    elif args.command == "diagnose":
        cmd_diagnose(args.input, args.output_dir, period=args.period, max_lag=args.max_lag, differenced=args.difference)
    else:
        config = load_config(args.config).with_seed(args.seed)
        if args.command == "run":
            cmd_run(config, args.input, args.output_dir)
        else:
            cmd_cv(config, args.input, args.output_dir)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        run_command(args)
    except ValidationError as ve:
        announce(f"invalid configuration: {ve.errors()[0]['msg']}", ok=False)
        return ConfigError.exit_code
    except ToolkitError as e:
        logger.debug("Command %s failed", args.command, exc_info=True)
        announce(f"{type(e).__name__}: {e}", ok=False)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
