from typing import Optional, Tuple

from pydantic import BaseModel, Field

MIN_SIZE_CHANGE = 0.95
MAX_SIZE_CHANGE = 1.1


class BoxEstimate(BaseModel):
    """Target center (x, y) and size (w, h) in pixel coordinates, origin top-left"""
    center: Tuple[float, float]
    size: Tuple[float, float]
    raw_size: Tuple[float, float]
    delta_size: Optional[float] = Field(None, ge=MIN_SIZE_CHANGE, le=MAX_SIZE_CHANGE)
    raw_delta: Optional[float] = Field(None, ge=0)


class SearchRegion(BaseModel):
    """Crop rectangle (x0, y0, width, height) inside the image and its resize target"""
    x0: float
    y0: float
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    image_size: Tuple[int, int]
    out_resolution: Tuple[int, int]
