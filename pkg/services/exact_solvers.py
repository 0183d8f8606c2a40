"""Matrix form of the internal loss and its two closed-form minimizers.

With X the stacked im2col matrix of all samples (HWM x K^2C) and W_d the
diagonal of sqrt(gamma_t) * w_t for output channel d, each channel solves

  primal  tau_d = (X^T W_d^2 X + lam I)^-1 X^T W_d^2 e_d        (K^2C system)
  dual    tau_d = X^T W_d (W_d X X^T W_d + lam I)^-1 W_d e_d    (HWM system)

Both systems are SPD for lam > 0 and are factored with Cholesky.
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from models.learner import LearnerProblem, SolveReport
from .errors import CapacityError, NumericError
from .flop_model import dual_flops, primal_flops
from .tensor_ops import FilterWeights, im2col

logger = logging.getLogger(__name__)

DEFAULT_MATRIX_BUDGET = 50_000_000
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MatrixizedProblem:
    """Per-output-channel reduction of a LearnerProblem.

    X is shared by every output channel. weights[:, d] holds sqrt(gamma) * w
    and labels[:, d] the stacked e for channel d.
    """
    X: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    lam: float
    kernel_size: int
    in_channels: int

    @property
    def out_channels(self) -> int:
        return self.labels.shape[1]

    def vec(self, tau: FilterWeights) -> np.ndarray:
        """Flatten a K x K x C x D filter to K^2C x D columns"""
        return np.asarray(tau).reshape(-1, self.out_channels)

    def unvec(self, columns: np.ndarray) -> FilterWeights:
        k = self.kernel_size
        return columns.reshape(k, k, self.in_channels, self.out_channels)


def _check_budget(entries: int, budget: int, what: str) -> None:
    if entries > budget:
        raise CapacityError(
            f"{what} needs {entries} entries, over the budget of {budget}", size=entries, budget=budget
        )


def matrixize(problem: LearnerProblem, budget: int = DEFAULT_MATRIX_BUDGET) -> MatrixizedProblem:
    """Build X, the weight diagonals and the stacked labels of a problem"""
    k = problem.kernel_size
    rows = problem.height * problem.width * len(problem.samples)
    cols = k * k * problem.in_channels
    _check_budget(rows * cols, budget, f"matrixized X ({rows} x {cols})")

    blocks, weights, labels = [], [], []
    for sample in problem.samples:
        blocks.append(im2col(sample.features, k))
        weights.append(np.sqrt(sample.global_weight) * sample.importance.reshape(-1, problem.out_channels))
        labels.append(sample.labels.reshape(-1, problem.out_channels))
    return MatrixizedProblem(
        X=np.concatenate(blocks, axis=0),
        weights=np.concatenate(weights, axis=0),
        labels=np.concatenate(labels, axis=0),
        lam=problem.lam,
        kernel_size=k,
        in_channels=problem.in_channels,
    )


def matrix_loss(matrixized: MatrixizedProblem, tau: FilterWeights) -> float:
    """1/2 sum_d ||W_d (X tau_d - e_d)||^2 + lam/2 ||tau||^2"""
    columns = matrixized.vec(tau)
    residual = matrixized.weights * (matrixized.X @ columns - matrixized.labels)
    return 0.5 * float(np.sum(residual ** 2)) + 0.5 * matrixized.lam * float(np.sum(columns ** 2))


def _require_positive_lambda(problem: LearnerProblem) -> None:
    if not problem.lam > 0:
        raise ValueError(f"closed-form solvers need lambda > 0, got {problem.lam}")


def _factor_and_solve(system: np.ndarray, rhs: np.ndarray, channel: int, check_condition: bool) -> np.ndarray:
    if check_condition:
        condition = float(np.linalg.cond(system))
        if not np.isfinite(condition) or condition > CONDITION_LIMIT:
            raise NumericError(
                f"system for output channel {channel} is ill-conditioned (cond {condition:.3e})",
                condition=condition,
            )
    try:
        factor = cho_factor(system, lower=True, check_finite=True)
        return cho_solve(factor, rhs, check_finite=False)
    except (LinAlgError, ValueError) as e:
        raise NumericError(f"Cholesky solve failed for output channel {channel}: {str(e)}") from e


def solve_primal(problem: LearnerProblem, budget: int = DEFAULT_MATRIX_BUDGET,
                 check_condition: bool = True) -> FilterWeights:
    """Normal equations in filter space, one K^2C system per output channel"""
    _require_positive_lambda(problem)
    m = matrixize(problem, budget)
    size = m.X.shape[1]
    _check_budget(size * size, budget, f"primal system ({size} x {size})")
    identity = np.eye(size, dtype=m.X.dtype)
    columns = np.empty((size, m.out_channels), dtype=m.X.dtype)
    for d in range(m.out_channels):
        sq = m.weights[:, d] ** 2
        weighted_x = m.X * sq[:, None]
        system = m.X.T @ weighted_x + m.lam * identity
        rhs = weighted_x.T @ m.labels[:, d]
        columns[:, d] = _factor_and_solve(system, rhs, d, check_condition)
    return m.unvec(columns)


def solve_dual(problem: LearnerProblem, budget: int = DEFAULT_MATRIX_BUDGET,
               check_condition: bool = True) -> FilterWeights:
    """Woodbury form in sample space, one HWM system per output channel"""
    _require_positive_lambda(problem)
    m = matrixize(problem, budget)
    rows = m.X.shape[0]
    _check_budget(rows * rows, budget, f"dual system ({rows} x {rows})")
    gram = m.X @ m.X.T
    identity = np.eye(rows, dtype=m.X.dtype)
    columns = np.empty((m.X.shape[1], m.out_channels), dtype=m.X.dtype)
    for d in range(m.out_channels):
        wd = m.weights[:, d]
        system = wd[:, None] * gram * wd[None, :] + m.lam * identity
        coef = _factor_and_solve(system, wd * m.labels[:, d], d, check_condition)
        columns[:, d] = m.X.T @ (wd * coef)
    return m.unvec(columns)


SOLVERS: dict = {"primal": solve_primal, "dual": solve_dual}
_FLOPS: dict = {"primal": primal_flops, "dual": dual_flops}


def solve_exact(problem: LearnerProblem, method: str,
                budget: int = DEFAULT_MATRIX_BUDGET) -> Tuple[FilterWeights, SolveReport]:
    """Run one closed-form solver and wrap the result in a SolveReport"""
    if method not in SOLVERS:
        raise ValueError(f"unknown closed-form method {method!r}, expected one of {sorted(SOLVERS)}")
    solver: Callable[..., FilterWeights] = SOLVERS[method]
    start = time.perf_counter()
    try:
        tau = solver(problem, budget)
    except Exception as e:
        logger.error(f"{method} solve failed: {str(e)}")
        raise
    elapsed = time.perf_counter() - start
    final_loss = matrix_loss(matrixize(problem, budget), tau)
    logger.info(f"{method} solve finished in {elapsed:.4f}s, loss {final_loss:.6e}")
    report = SolveReport(
        method=method,
        converged=True,
        final_loss=final_loss,
        elapsed_s=elapsed,
        flop_estimate=_FLOPS[method](problem.height, problem.width, problem.kernel_size, problem.in_channels,
                                     problem.out_channels, len(problem.samples)),
    )
    return tau, report
