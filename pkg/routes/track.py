import json
import logging
import os

from config.settings import AppSettings
from models.manifest import RunManifest
from models.memory import MemoryConfig
from services.export_handler import ExportHandler, manifest_config
from services.ltt_codec import read_tensor
from services.meta_toy import run_inference
from services.target_estimator import mask_to_box, search_region
from services.toy_data import generate_sequence
from services.toy_modules import ToyModules, load_modules
from . import parse_list

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("track", help="Estimate a target box from a mask, or simulate the tracking loop")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--mask", help="LTT mask, H x W or H x W x 1")
    source.add_argument("--simulate", type=int, metavar="FRAMES", help="run the online loop on a synthetic video")
    parser.add_argument("--prev-box", help="previous box as W,H or X,Y,W,H")
    parser.add_argument("--image-size", help="W,H of the image; also reports the search region")
    parser.add_argument("--modules", help="directory of trained toy modules (simulation)")
    parser.add_argument("--box-init", action="store_true", help="use the box-initialization memory preset")
    parser.add_argument("--lambda", dest="lam", type=float, default=None)
    parser.add_argument("--kernel-size", type=int, default=3)
    parser.add_argument("--height", type=int, default=16)
    parser.add_argument("--width", type=int, default=16)
    parser.add_argument("--channels", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--memory-dump", help="JSON file for the final sample memory state")
    parser.add_argument("--out", help="JSON file for the result")
    parser.set_defaults(handler=handle)


def _prev_size(text):
    if text is None:
        return None
    values = parse_list(text, float)
    if len(values) not in (2, 4):
        raise ValueError(f"--prev-box expects W,H or X,Y,W,H, got {text!r}")
    return tuple(values[-2:])


def _estimate(args) -> dict:
    box = mask_to_box(read_tensor(args.mask), prev_size=_prev_size(args.prev_box))
    result = {"box": box.model_dump(mode="json")}
    if args.image_size:
        image_size = tuple(parse_list(args.image_size, int))
        result["search_region"] = search_region(box, image_size).model_dump(mode="json")
    return result


def _simulate(args, settings: AppSettings, handler: ExportHandler) -> dict:
    sequence = generate_sequence(args.seed, args.height, args.width, args.channels, args.simulate)
    if args.modules:
        modules = load_modules(args.modules)
    else:
        modules = ToyModules.initialize(4, args.channels, args.kernel_size, seed=args.seed)
    memory_config = MemoryConfig.box_initialization() if args.box_init else MemoryConfig()
    lam = settings.default_lambda if args.lam is None else args.lam
    result = run_inference(modules, sequence, memory_config, lam, args.kernel_size)
    if args.memory_dump:
        handler.export_json(result.memory.state(len(sequence) - 1), args.memory_dump)
    return {
        "frames": len(sequence),
        "mean_iou": result.mean_iou,
        "ious": result.ious,
        "boxes": [box.model_dump(mode="json") for box in result.boxes],
        "search_regions": [None if r is None else r.model_dump(mode="json") for r in result.regions],
        "memory_frames": result.memory.frame_indices,
    }


def handle(args, settings: AppSettings) -> int:
    handler = ExportHandler(os.curdir)
    result = _simulate(args, settings, handler) if args.simulate is not None else _estimate(args)
    print(json.dumps(result, indent=2))
    if args.out:
        path = handler.export_json(result, args.out)
        outputs = [path] + ([args.memory_dump] if args.memory_dump else [])
        inputs = [p for p in (args.mask, args.modules) if p]
        handler.export_manifest(
            RunManifest(subcommand="track", inputs=inputs, config=manifest_config(vars(args)), outputs=outputs,
                        seed=args.seed),
            path,
        )
    return 0
