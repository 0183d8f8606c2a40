from typing import List

from pydantic import BaseModel, Field


class MemoryConfig(BaseModel):
    """Size, decay and update schedule of the few-shot sample memory"""
    k_max: int = Field(32, ge=1)
    eta: float = Field(0.9, gt=0, le=1)
    n_init: int = Field(20, ge=0)
    n_update: int = Field(3, ge=0)
    update_period: int = Field(1, ge=1)
    keep_first_frame: bool = True

    @classmethod
    def box_initialization(cls, **overrides) -> "MemoryConfig":
        """Preset used when the first frame only provides a box-derived mask"""
        values = dict(eta=0.8, keep_first_frame=False, update_period=5, n_update=5)
        values.update(overrides)
        return cls(**values)


class MemoryState(BaseModel):
    frame_indices: List[int]
    weights: List[float]
    current_frame: int
    config: MemoryConfig
