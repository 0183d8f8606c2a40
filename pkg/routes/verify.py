import logging
import os

from config.settings import AppSettings
from models.manifest import RunManifest
from services.errors import NumericError
from services.export_handler import ExportHandler, manifest_config
from services.verification import SUITE_ORDER, verify

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="Run the seeded property suites")
    parser.add_argument("--suite", choices=SUITE_ORDER + ["all"], default="all")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cases", type=int, default=None, help="cases per suite (suite default if omitted)")
    parser.add_argument("--out", help="JSON file for the suite summary")
    parser.set_defaults(handler=handle)


def handle(args, settings: AppSettings) -> int:
    report = verify(args.suite, seed=args.seed, cases=args.cases)
    for result in report.suites:
        status = "PASS" if result.ok else "FAIL"
        print(f"{result.suite:10s} {status}  {result.passed}/{result.cases} passed  "
              f"max error {result.max_error:.3e} (tolerance {result.tolerance:.0e})")
    if args.out:
        handler = ExportHandler(os.curdir)
        path = handler.export_json(report, args.out)
        handler.export_manifest(
            RunManifest(subcommand="verify", config=manifest_config(vars(args)), outputs=[path], seed=args.seed),
            path,
        )
    if not report.ok:
        failed = [result.suite for result in report.suites if not result.ok]
        logger.error(f"Suites failed: {', '.join(failed)}")
        return NumericError.exit_code
    return 0
