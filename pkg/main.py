"""Command-line entry point: solve, verify, bench, toy-train and track"""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from config.settings import AppSettings, configure_logging
from routes import bench, solve, toy_train, track, verify
from services.errors import LearnerError

logger = logging.getLogger(__name__)

INPUT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fewshot", description="Few-shot learner for target-model optimization")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--matrix-budget", type=int, default=None,
                        help="largest dense matrix (entries) the closed-form solvers may build")
    parser.add_argument("--reports-dir", default=None, help="default directory for generated reports")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for route in (solve, verify, bench, toy_train, track):
        route.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {key: value for key, value in (("matrix_budget", args.matrix_budget),
                                               ("reports_dir", args.reports_dir)) if value is not None}
    try:
        settings = AppSettings(log_level=args.log_level, **overrides)
        configure_logging(settings)
        return args.handler(args, settings)
    except LearnerError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command} rejected its input: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
