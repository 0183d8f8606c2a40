"""Seeded random learner problems shared by tests, verify suites and benchmarks"""
from typing import Optional

import numpy as np

from models.learner import LearnerProblem, TrainingSample


def random_problem(rng: np.random.Generator, height: int = 4, width: int = 4, in_channels: int = 2,
                   out_channels: int = 2, kernel_size: int = 3, samples: int = 2, lam: float = 0.1,
                   dtype: Optional[np.dtype] = np.float64) -> LearnerProblem:
    """Gaussian features and labels; importance weights of magnitude 0.7..1.3 with random signs"""
    items = []
    raw_gammas = rng.uniform(0.5, 1.5, size=samples)
    gammas = raw_gammas / raw_gammas.sum()
    for gamma in gammas:
        features = rng.standard_normal((height, width, in_channels))
        labels = rng.standard_normal((height, width, out_channels))
        magnitude = rng.uniform(0.7, 1.3, size=(height, width, out_channels))
        signs = rng.choice([-1.0, 1.0], size=(height, width, out_channels))
        items.append(TrainingSample(features.astype(dtype), labels, magnitude * signs, float(gamma)))
    return LearnerProblem(tuple(items), lam=lam, kernel_size=kernel_size)


def random_filter(rng: np.random.Generator, problem: LearnerProblem, scale: float = 1.0) -> np.ndarray:
    return (scale * rng.standard_normal(problem.filter_shape)).astype(problem.dtype)


def scalar_problem(x: float, e: float, w: float = 1.0, lam: float = 0.0, gamma: float = 1.0) -> LearnerProblem:
    """1 x 1 x 1 problem with a 1 x 1 kernel"""
    sample = TrainingSample(np.full((1, 1, 1), x), np.full((1, 1, 1), e), np.full((1, 1, 1), w), gamma)
    return LearnerProblem((sample,), lam=lam, kernel_size=1)
