"""Write the scalar and mask LTT fixtures used in the README examples"""
import logging
import os
import sys
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).resolve().parent.parent))

from services.ltt_codec import write_tensor  # noqa: E402

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def make_fixtures(directory: str = "fixtures") -> list:
    os.makedirs(directory, exist_ok=True)
    one = np.ones((1, 1, 1))
    mask = np.zeros((8, 8, 1))
    mask[2:6, 3:7] = 1.0
    tensors = {
        "x_scalar.ltt": 2.0 * one,
        "e_scalar.ltt": 6.0 * one,
        "w_scalar.ltt": one,
        "tau0_scalar.ltt": np.zeros((1, 1, 1, 1)),
        "mask_square.ltt": mask,
        "mask_empty.ltt": np.zeros((8, 8, 1)),
    }
    paths = []
    for name, array in tensors.items():
        paths.append(write_tensor(os.path.join(directory, name), array))
        logger.info(f"Wrote {name} {array.shape}")
    return paths


if __name__ == "__main__":
    make_fixtures(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
