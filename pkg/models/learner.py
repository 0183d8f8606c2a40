from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from services.errors import DimensionError
from services.tensor_ops import as_tensor, check_kernel

DEFAULT_LAMBDA = 0.05


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """One few-shot training sample (x_t, e_t, w_t) with its global frame weight"""
    features: np.ndarray
    labels: np.ndarray
    importance: np.ndarray
    global_weight: float = 1.0

    def __post_init__(self):
        features = as_tensor(self.features)
        labels = as_tensor(self.labels, dtype=features.dtype)
        importance = as_tensor(self.importance, dtype=features.dtype)
        if features.ndim != 3 or labels.ndim != 3 or importance.ndim != 3:
            raise DimensionError(
                f"samples need H x W x C features and H x W x D labels/importance, got "
                f"{features.shape}, {labels.shape}, {importance.shape}"
            )
        if labels.shape[:2] != features.shape[:2]:
            raise DimensionError(f"labels H x W {labels.shape[:2]} differs from features {features.shape[:2]}")
        if importance.shape != labels.shape:
            raise DimensionError(f"importance shape {importance.shape} differs from labels {labels.shape}")
        if not np.isfinite(self.global_weight) or self.global_weight < 0:
            raise ValueError(f"global weight must be finite and nonnegative, got {self.global_weight}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "importance", importance)
        object.__setattr__(self, "global_weight", float(self.global_weight))

    @classmethod
    def uniform(cls, features, labels, global_weight: float = 1.0) -> "TrainingSample":
        labels = np.asarray(labels)
        return cls(features, labels, np.ones(labels.shape), global_weight)


@dataclass(frozen=True, eq=False)
class LearnerProblem:
    """The internal loss instance: a training set plus regularization and kernel size"""
    samples: Tuple[TrainingSample, ...]
    lam: float = DEFAULT_LAMBDA
    kernel_size: int = 3
    dtype: np.dtype = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("a learner problem needs at least one training sample")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and nonnegative, got {self.lam}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise DimensionError(f"kernel size must be odd and positive, got {self.kernel_size}")
        reference = samples[0]
        for index, sample in enumerate(samples[1:], start=1):
            if sample.features.shape != reference.features.shape:
                raise DimensionError(
                    f"sample {index} features {sample.features.shape} differ from sample 0 {reference.features.shape}"
                )
            if sample.labels.shape != reference.labels.shape:
                raise DimensionError(
                    f"sample {index} labels {sample.labels.shape} differ from sample 0 {reference.labels.shape}"
                )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "dtype", np.result_type(*(s.features for s in samples)))

    @property
    def height(self) -> int:
        return self.samples[0].features.shape[0]

    @property
    def width(self) -> int:
        return self.samples[0].features.shape[1]

    @property
    def in_channels(self) -> int:
        return self.samples[0].features.shape[2]

    @property
    def out_channels(self) -> int:
        return self.samples[0].labels.shape[2]

    @property
    def filter_shape(self) -> Tuple[int, int, int, int]:
        return (self.kernel_size, self.kernel_size, self.in_channels, self.out_channels)

    def zeros_filter(self) -> np.ndarray:
        return np.zeros(self.filter_shape, dtype=self.dtype)

    def check_filter(self, tau: np.ndarray) -> np.ndarray:
        """Validate a filter against this problem's K, C and D"""
        tau = np.asarray(tau)
        check_kernel(tau)
        if tau.shape != self.filter_shape:
            raise DimensionError(f"filter shape {tau.shape} does not match problem filter shape {self.filter_shape}")
        return tau


class IterationRecord(BaseModel):
    loss: float
    alpha: float = Field(ge=0)
    grad_norm: float = Field(ge=0)


class SolveReport(BaseModel):
    method: str = "sd"
    iterations: List[IterationRecord] = []
    iterations_run: int = 0
    converged: bool = False
    final_loss: Optional[float] = None
    elapsed_s: float = 0.0
    flop_estimate: int = 0
