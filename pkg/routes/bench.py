import logging
import os

from config.settings import AppSettings
from models.bench import ComplexityConfig
from models.manifest import RunManifest
from services.complexity_bench import records_frame, run_sweep
from services.export_handler import ExportHandler, manifest_config
from services.flop_model import AXES
from . import parse_list

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="Time a solver over one problem dimension")
    parser.add_argument("--method", choices=["sd", "primal", "dual"], default="sd")
    parser.add_argument("--axis", choices=list(AXES), required=True)
    parser.add_argument("--values", required=True, help="comma separated axis values, e.g. 1,2,4,8")
    parser.add_argument("--height", type=int, default=8)
    parser.add_argument("--width", type=int, default=8)
    parser.add_argument("--kernel-size", type=int, default=3)
    parser.add_argument("--in-channels", type=int, default=4)
    parser.add_argument("--out-channels", type=int, default=3)
    parser.add_argument("--samples", type=int, default=2)
    parser.add_argument("--iterations", type=int, default=5)
    parser.add_argument("--repetitions", type=int, default=5)
    parser.add_argument("--warmup", type=int, default=2)
    parser.add_argument("--float32", action="store_true", help="time in 32-bit precision")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="CSV file, one row per record")
    parser.add_argument("--json", help="JSON sweep summary with fitted slopes")
    parser.add_argument("--pdf", help="PDF complexity report")
    parser.set_defaults(handler=handle)


def handle(args, settings: AppSettings) -> int:
    base = ComplexityConfig(
        height=args.height,
        width=args.width,
        kernel_size=args.kernel_size,
        in_channels=args.in_channels,
        out_channels=args.out_channels,
        samples=args.samples,
        iterations=args.iterations,
        method=args.method,
        repetitions=args.repetitions,
        warmup=args.warmup,
        dtype="float32" if args.float32 else "float64",
        seed=args.seed,
    )
    values = parse_list(args.values, int)
    sweep = run_sweep(base, args.axis, values, settings.matrix_budget)

    handler = ExportHandler(os.curdir)
    outputs = []
    if args.csv:
        outputs.append(handler.export_csv(records_frame(sweep.records), args.csv))
    if args.json:
        outputs.append(handler.export_json(sweep, args.json))
    if args.pdf:
        outputs.append(handler.export_pdf(sweep, args.pdf))
    if outputs:
        handler.export_manifest(
            RunManifest(subcommand="bench", config=manifest_config(vars(args)), outputs=outputs, seed=args.seed),
            outputs[0],
        )

    print(records_frame(sweep.records)[[AXES[args.axis], "time_ns_median", "flops", "skipped"]]
          .to_string(index=False))
    slope = "N/A" if sweep.time_slope is None else f"{sweep.time_slope:.3f}"
    flop_slope = "N/A" if sweep.flop_slope is None else f"{sweep.flop_slope:.3f}"
    print(f"time slope {slope}, flop slope {flop_slope}, primal/dual parity {sweep.parity_error:.2e}")
    return 0
