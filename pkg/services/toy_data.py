"""Synthetic single-object videos for the toy meta-learning loop.

A disk or rectangle moves across the frame, bouncing off the borders. The
features are a fixed orthogonal mixing of a noisy target indicator, the two
normalized pixel coordinates and independent noise channels, so the target is
linearly recoverable but not given away by any single channel.
"""
from typing import Tuple

import numpy as np

from models.toy import ToySequence
from .errors import DimensionError

INDICATOR_NOISE = 0.3
RADIUS_RANGE = (0.28, 0.36)
MAX_SPEED = 1.5


def mixing_matrix(channels: int, mixing_seed: int = 0) -> np.ndarray:
    """Random orthogonal C x C matrix, fixed by its seed"""
    rng = np.random.default_rng([mixing_seed, channels])
    q, r = np.linalg.qr(rng.standard_normal((channels, channels)))
    return q * np.sign(np.diag(r))


def _target_mask(shape: str, center: Tuple[float, float], radius: float, height: int, width: int) -> np.ndarray:
    rows, cols = np.indices((height, width), dtype=np.float64)
    dx = cols - center[0]
    dy = rows - center[1]
    if shape == "disk":
        inside = dx ** 2 + dy ** 2 <= radius ** 2
    else:
        inside = (np.abs(dx) <= radius) & (np.abs(dy) <= radius)
    return inside.astype(np.float64)


def generate_sequence(seed: int, height: int, width: int, channels: int, length: int,
                      mixing_seed: int = 0) -> ToySequence:
    """Deterministic synthetic video of `length` frames"""
    if height < 8 or width < 8:
        raise DimensionError(f"toy frames must be at least 8 x 8, got {height} x {width}")
    if channels < 3:
        raise DimensionError(f"toy features need at least 3 channels, got {channels}")
    if length < 2:
        raise ValueError(f"a toy sequence needs at least 2 frames, got {length}")

    rng = np.random.default_rng(seed)
    shape = "disk" if rng.random() < 0.5 else "rect"
    radius = rng.uniform(*RADIUS_RANGE) * min(height, width)
    low = np.array([radius, radius])
    high = np.array([width - 1 - radius, height - 1 - radius])
    high = np.maximum(high, low)
    position = rng.uniform(low, high)
    velocity = rng.uniform(-MAX_SPEED, MAX_SPEED, size=2)
    mixing = mixing_matrix(channels, mixing_seed)

    rows, cols = np.indices((height, width), dtype=np.float64)
    x_coord = 2.0 * cols / (width - 1) - 1.0
    y_coord = 2.0 * rows / (height - 1) - 1.0

    features, masks, indicators = [], [], []
    for _ in range(length):
        mask = _target_mask(shape, (position[0], position[1]), radius, height, width)
        indicator = mask + INDICATOR_NOISE * rng.standard_normal((height, width))
        noise = rng.standard_normal((height, width, channels - 3))
        raw = np.concatenate([indicator[..., None], x_coord[..., None], y_coord[..., None], noise], axis=2)
        features.append(raw @ mixing)
        masks.append(mask[..., None])
        indicators.append(indicator)

        position = position + velocity
        for axis in range(2):
            if position[axis] < low[axis]:
                position[axis] = 2 * low[axis] - position[axis]
                velocity[axis] = -velocity[axis]
            elif position[axis] > high[axis]:
                position[axis] = 2 * high[axis] - position[axis]
                velocity[axis] = -velocity[axis]
        position = np.clip(position, low, high)

    return ToySequence(features=features, masks=masks, indicators=indicators, seed=seed)


def average_pool(array: np.ndarray, stride: int) -> np.ndarray:
    """Non-overlapping stride x stride average pooling of an H x W x C array"""
    if stride == 1:
        return array
    height, width, channels = array.shape
    if height % stride or width % stride:
        raise DimensionError(f"frame {height} x {width} is not divisible by stride {stride}")
    blocks = array.reshape(height // stride, stride, width // stride, stride, channels)
    return blocks.mean(axis=(1, 3))


def downsample_mask(mask: np.ndarray, stride: int) -> np.ndarray:
    """Bring a mask to the feature stride by average pooling"""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim == 2:
        mask = mask[..., None]
    return average_pool(mask, stride)


def downsample_sequence(sequence: ToySequence, stride: int) -> ToySequence:
    if stride == 1:
        return sequence
    return ToySequence(
        features=[average_pool(x, stride) for x in sequence.features],
        masks=[downsample_mask(m, stride) for m in sequence.masks],
        indicators=[downsample_mask(i, stride)[..., 0] for i in sequence.indicators],
        seed=sequence.seed,
    )


def iou(prediction: np.ndarray, target: np.ndarray, threshold: float = 0.5) -> float:
    """Jaccard index of two masks after thresholding; two empty masks score 1"""
    pred = np.asarray(prediction) > threshold
    gt = np.asarray(target) > threshold
    if pred.shape != gt.shape:
        raise DimensionError(f"iou: mask shapes differ, {pred.shape} vs {gt.shape}")
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, gt).sum() / union)
