"""Box estimation from a soft segmentation mask, and search-region arithmetic"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from models.tracking import MAX_SIZE_CHANGE, MIN_SIZE_CHANGE, BoxEstimate, SearchRegion
from .errors import DimensionError, EmptyTargetError

logger = logging.getLogger(__name__)

SEARCH_SCALE = 5.0
OUT_RESOLUTION = (832, 480)


def mask_to_box(mask: np.ndarray, prev_size: Optional[Tuple[float, float]] = None) -> BoxEstimate:
    """Estimate center and size of the target from its mask.

    The center is the mask's center of mass and the raw size four standard
    deviations per axis. With a previous size the result is the previous size
    scaled by the clamped change ratio; without one the raw size is returned.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim == 3 and mask.shape[2] == 1:
        mask = mask[:, :, 0]
    if mask.ndim != 2:
        raise DimensionError(f"mask must be H x W (or H x W x 1), got shape {mask.shape}")
    if np.any(mask < 0) or not np.all(np.isfinite(mask)):
        raise ValueError("mask values must be finite and nonnegative")

    z = float(mask.sum())
    if z <= 0.0:
        raise EmptyTargetError("empty target: mask has no positive values")

    rows, cols = np.indices(mask.shape, dtype=np.float64)
    cx = float((cols * mask).sum() / z)
    cy = float((rows * mask).sum() / z)
    var_x = float(((cols - cx) ** 2 * mask).sum() / z)
    var_y = float(((rows - cy) ** 2 * mask).sum() / z)
    raw_size = (4.0 * math.sqrt(var_x), 4.0 * math.sqrt(var_y))

    if prev_size is None:
        return BoxEstimate(center=(cx, cy), size=raw_size, raw_size=raw_size)

    prev_w, prev_h = (float(v) for v in prev_size)
    if not (prev_w > 0 and prev_h > 0):
        raise ValueError(f"previous box size must be positive, got {prev_size}")
    raw_delta = math.sqrt(raw_size[0] * raw_size[1] / (prev_w * prev_h))
    delta = min(max(raw_delta, MIN_SIZE_CHANGE), MAX_SIZE_CHANGE)
    return BoxEstimate(
        center=(cx, cy),
        size=(delta * prev_w, delta * prev_h),
        raw_size=raw_size,
        delta_size=delta,
        raw_delta=raw_delta,
    )


def _fit_axis(center: float, extent: float, limit: int) -> Tuple[float, float]:
    extent = min(extent, float(limit))
    start = center - extent / 2.0
    start = min(max(start, 0.0), limit - extent)
    return start, extent


def search_region(box: BoxEstimate, image_size: Tuple[int, int], scale_factor: float = SEARCH_SCALE,
                  out_resolution: Tuple[int, int] = OUT_RESOLUTION) -> SearchRegion:
    """Crop scale_factor times the box around its center, kept inside the image.

    Each side is first capped at the image extent, then the rectangle is
    shifted so it lies entirely within the image. The output resolution is
    reduced along one axis so it has the crop's aspect ratio.
    """
    image_w, image_h = (int(v) for v in image_size)
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image size must be positive, got {image_size}")
    box_w, box_h = box.size
    if not (box_w > 0 and box_h > 0):
        raise ValueError(f"box size must be positive, got {box.size}")
    if scale_factor <= 0:
        raise ValueError(f"scale factor must be positive, got {scale_factor}")

    x0, width = _fit_axis(box.center[0], scale_factor * box_w, image_w)
    y0, height = _fit_axis(box.center[1], scale_factor * box_h, image_h)

    out_w, out_h = out_resolution
    scale = min(out_w / width, out_h / height)
    fitted = (max(1, int(round(width * scale))), max(1, int(round(height * scale))))
    return SearchRegion(x0=x0, y0=y0, width=width, height=height,
                        image_size=(image_w, image_h), out_resolution=fitted)
