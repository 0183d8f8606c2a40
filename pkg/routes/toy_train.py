import logging
import os

from config.settings import AppSettings
from models.manifest import RunManifest
from models.toy import ToyTrainConfig
from services.export_handler import ExportHandler, manifest_config
from services.meta_toy import train_toy

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("toy-train", help="Train the toy label generator, weight predictor and decoder")
    parser.add_argument("--out-channels", type=int, default=4, help="label encoding width D")
    parser.add_argument("--kernel-size", type=int, default=3)
    parser.add_argument("--lambda", dest="lam", type=float, default=None)
    parser.add_argument("--n-init", type=int, default=5)
    parser.add_argument("--n-update", type=int, default=2)
    parser.add_argument("--sequence-length", type=int, default=4)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--learning-rate", type=float, default=1e-2)
    parser.add_argument("--height", type=int, default=16)
    parser.add_argument("--width", type=int, default=16)
    parser.add_argument("--channels", type=int, default=8)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--fixed-labels", action="store_true", help="use the mask as label, with unit weights")
    parser.add_argument("--uniform-weights", action="store_true", help="learn labels only, keeping every weight at one")
    parser.add_argument("--learn-lambda", action="store_true")
    parser.add_argument("--eval-every", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", help="directory for metrics.csv and the trained modules")
    parser.set_defaults(handler=handle)


def handle(args, settings: AppSettings) -> int:
    config = ToyTrainConfig(
        out_channels=args.out_channels,
        kernel_size=args.kernel_size,
        lam=settings.default_lambda if args.lam is None else args.lam,
        n_init=args.n_init,
        n_update=args.n_update,
        sequence_length=args.sequence_length,
        steps=args.steps,
        learning_rate=args.learning_rate,
        height=args.height,
        width=args.width,
        channels=args.channels,
        stride=args.stride,
        fixed_labels=args.fixed_labels,
        learn_weights=not args.uniform_weights,
        learn_lambda=args.learn_lambda,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    modules, metrics = train_toy(config)

    out_dir = args.out_dir or os.path.join(settings.reports_dir, "toy")
    handler = ExportHandler(out_dir)
    metrics_path = handler.export_csv(metrics, "metrics.csv")
    modules_path = modules.save(os.path.join(out_dir, "modules"))
    handler.export_manifest(
        RunManifest(subcommand="toy-train", config=config.model_dump(), outputs=[metrics_path, modules_path],
                    seed=config.seed),
        metrics_path,
    )
    if len(metrics):
        final = metrics.iloc[-1]
        print(f"final train loss {final['train_loss']:.4f}, test IoU {final['test_iou']:.3f} -> {out_dir}")
    else:
        print(f"no training steps run -> {out_dir}")
    return 0
