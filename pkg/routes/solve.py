import logging
import os

from config.settings import AppSettings
from models.learner import LearnerProblem, TrainingSample
from models.manifest import RunManifest
from services.exact_solvers import solve_exact
from services.export_handler import ExportHandler, manifest_config
from services.learner import solve_sd
from services.ltt_codec import read_tensor, write_tensor

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="Fit the target-module filter on LTT training samples")
    parser.add_argument("--sample", action="append", required=True, metavar="X,E,W[,GAMMA]",
                        help="LTT files of one sample (features, labels, importance) and an optional global weight")
    parser.add_argument("--method", choices=["sd", "primal", "dual"], default="sd")
    parser.add_argument("--iters", type=int, default=10, help="steepest-descent iterations")
    parser.add_argument("--lambda", dest="lam", type=float, default=None, help="regularization weight")
    parser.add_argument("--kernel-size", type=int, default=3)
    parser.add_argument("--tau0", help="LTT warm-start filter (sd only)")
    parser.add_argument("--grad-tol", type=float, default=0.0, help="stop once ||g|| falls to this value")
    parser.add_argument("--out", required=True, help="LTT file for the fitted filter")
    parser.add_argument("--report", help="JSON file for the solve report")
    parser.set_defaults(handler=handle)


def parse_sample(spec: str) -> TrainingSample:
    parts = [part.strip() for part in spec.split(",")]
    if len(parts) not in (3, 4):
        raise ValueError(f"--sample expects X,E,W[,GAMMA], got {spec!r}")
    gamma = float(parts[3]) if len(parts) == 4 else 1.0
    return TrainingSample(read_tensor(parts[0]), read_tensor(parts[1]), read_tensor(parts[2]), gamma)


def handle(args, settings: AppSettings) -> int:
    samples = tuple(parse_sample(spec) for spec in args.sample)
    lam = settings.default_lambda if args.lam is None else args.lam
    problem = LearnerProblem(samples, lam=lam, kernel_size=args.kernel_size)
    logger.info(f"Solving with {args.method}: {len(samples)} samples, filter {problem.filter_shape}, lambda {lam}")

    if args.method == "sd":
        tau0 = read_tensor(args.tau0) if args.tau0 else problem.zeros_filter()
        tau, report = solve_sd(problem, tau0, args.iters, args.grad_tol)
    else:
        tau, report = solve_exact(problem, args.method, settings.matrix_budget)

    write_tensor(args.out, tau)
    outputs = [args.out]
    handler = ExportHandler(os.curdir)
    if args.report:
        outputs.append(handler.export_json(report, args.report))
    inputs = [path.strip() for spec in args.sample for path in spec.split(",")[:3]]
    if args.tau0:
        inputs.append(args.tau0)
    handler.export_manifest(
        RunManifest(subcommand="solve", inputs=inputs, config=manifest_config(vars(args)), outputs=outputs),
        args.out,
    )
    print(f"{args.method}: loss {report.final_loss:.12g} after {report.iterations_run} iterations -> {args.out}")
    return 0
