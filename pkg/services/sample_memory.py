import logging
from typing import List, Optional, Tuple

import numpy as np

from models.learner import DEFAULT_LAMBDA, LearnerProblem, TrainingSample
from models.memory import MemoryConfig, MemoryState
from .errors import OrderingError


class SampleMemory:
    """Bounded few-shot training set with exponentially decaying frame weights.

    Entries are kept in insertion order. When the memory overflows the oldest
    entry is evicted, except the first inserted one when keep_first_frame is set.
    """

    def __init__(self, config: Optional[MemoryConfig] = None):
        self.config = config or MemoryConfig()
        self.logger = logging.getLogger(__name__)
        self._entries: List[Tuple[int, TrainingSample]] = []
        self._protected: Optional[int] = None

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def frame_indices(self) -> List[int]:
        return [frame for frame, _ in self._entries]

    @property
    def latest_frame(self) -> Optional[int]:
        return self._entries[-1][0] if self._entries else None

    def insert(self, frame_index: int, sample: TrainingSample) -> "SampleMemory":
        """Add the sample of a new frame, evicting the oldest entry on overflow"""
        if frame_index < 0:
            raise OrderingError(f"frame index must be nonnegative, got {frame_index}")
        latest = self.latest_frame
        if latest is not None and frame_index <= latest:
            raise OrderingError(f"frame {frame_index} inserted after frame {latest}; indices must strictly increase")
        if not self._entries and self.config.keep_first_frame:
            self._protected = frame_index
        self._entries.append((frame_index, sample))
        if len(self._entries) > self.config.k_max:
            self._evict()
        return self

    def _evict(self) -> None:
        for position, (frame, _) in enumerate(self._entries):
            if frame != self._protected:
                del self._entries[position]
                self.logger.debug(f"Evicted frame {frame}, memory holds {len(self._entries)} samples")
                return

    def weights(self, current_frame: Optional[int] = None) -> np.ndarray:
        """Normalized decay weights gamma_t proportional to eta ** (current_frame - t)"""
        if not self._entries:
            raise ValueError("sample memory is empty")
        if current_frame is None:
            current_frame = self.latest_frame
        ages = current_frame - np.asarray(self.frame_indices, dtype=np.float64)
        raw = self.config.eta ** (ages - ages.min())
        return raw / raw.sum()

    def training_samples(self, current_frame: Optional[int] = None) -> List[TrainingSample]:
        """Stored samples re-weighted with the current decay weights"""
        gammas = self.weights(current_frame)
        return [
            TrainingSample(sample.features, sample.labels, sample.importance, float(gamma))
            for (_, sample), gamma in zip(self._entries, gammas)
        ]

    def problem(self, lam: float = DEFAULT_LAMBDA, kernel_size: int = 3,
                current_frame: Optional[int] = None) -> LearnerProblem:
        return LearnerProblem(tuple(self.training_samples(current_frame)), lam=lam, kernel_size=kernel_size)

    def state(self, current_frame: Optional[int] = None) -> MemoryState:
        if current_frame is None:
            current_frame = self.latest_frame if self._entries else 0
        weights = self.weights(current_frame).tolist() if self._entries else []
        return MemoryState(
            frame_indices=self.frame_indices,
            weights=weights,
            current_frame=current_frame,
            config=self.config,
        )


def should_update(config: MemoryConfig, frame_index: int) -> Tuple[bool, int]:
    """Whether the learner runs on this frame, and with how many iterations"""
    if frame_index < 0:
        raise ValueError(f"frame index must be nonnegative, got {frame_index}")
    if frame_index == 0:
        return True, config.n_init
    if frame_index % config.update_period == 0:
        return True, config.n_update
    return False, 0
