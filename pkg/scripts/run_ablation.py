"""Learned labels and weights, learned labels with unit weights, and the fixed
single-channel baseline, over seeds.

Writes one CSV row per (variant, seed) with the final held-out IoU and prints
the per-variant medians.
"""
import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

sys.path.append(str(Path(__file__).resolve().parent.parent))

from models.toy import ToyTrainConfig  # noqa: E402
from services.meta_toy import train_toy  # noqa: E402

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def run_ablation(widths, seeds, steps: int) -> pd.DataFrame:
    rows = []
    variants = [("fixed", 1, True, False)]
    variants += [("labels-only", d, False, False) for d in widths]
    variants += [("learned", d, False, True) for d in widths]
    for name, width, fixed, weights in variants:
        for seed in seeds:
            config = ToyTrainConfig(out_channels=width, fixed_labels=fixed, learn_weights=weights, steps=steps,
                                    seed=seed, eval_every=0)
            _, metrics = train_toy(config)
            final_iou = float(metrics["test_iou"].iloc[-1]) if len(metrics) else float("nan")
            logger.info(f"{name} D={width} seed={seed}: test IoU {final_iou:.3f}")
            rows.append({"variant": name, "out_channels": width, "seed": seed, "test_iou": final_iou})
    return pd.DataFrame(rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--widths", default="4", help="comma separated label widths D for the learned variants")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--out", default="ablation.csv")
    args = parser.parse_args()

    widths = [int(w) for w in args.widths.split(",")]
    results = run_ablation(widths, range(args.seeds), args.steps)
    results.to_csv(args.out, index=False)
    print(results.groupby(["variant", "out_channels"])["test_iou"].median().to_string())
    logger.info(f"Wrote {len(results)} rows to {args.out}")


if __name__ == "__main__":
    main()
