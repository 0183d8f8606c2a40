from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .learner import DEFAULT_LAMBDA


@dataclass(frozen=True, eq=False)
class ToySequence:
    """Synthetic video: features H x W x C and binary masks H x W x 1 per frame"""
    features: List[np.ndarray]
    masks: List[np.ndarray]
    indicators: List[np.ndarray]
    seed: int

    def __len__(self) -> int:
        return len(self.features)

    @property
    def image_size(self):
        height, width = self.masks[0].shape[:2]
        return width, height


class ToyTrainConfig(BaseModel):
    out_channels: int = Field(4, ge=1)
    kernel_size: int = Field(3, ge=1)
    lam: float = Field(DEFAULT_LAMBDA, gt=0)
    n_init: int = Field(5, ge=0)
    n_update: int = Field(2, ge=0)
    sequence_length: int = Field(4, ge=2)
    steps: int = Field(500, ge=0)
    learning_rate: float = Field(1e-2, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    grad_clip: Optional[float] = Field(5.0, gt=0)
    height: int = Field(16, ge=8)
    width: int = Field(16, ge=8)
    channels: int = Field(8, ge=3)
    eta: float = Field(0.9, gt=0, le=1)
    fixed_labels: bool = False
    learn_weights: bool = True
    learn_lambda: bool = False
    eval_every: int = Field(50, ge=0)
    eval_sequences: int = Field(8, ge=1)
    eval_length: int = Field(8, ge=2)
    stride: int = Field(1, ge=1)
    seed: int = 0

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {value}")
        return value


class IouStats(BaseModel):
    per_sequence: List[float]
    mean: float = Field(ge=0, le=1)
    median: float = Field(ge=0, le=1)
    minimum: float = Field(ge=0, le=1)
