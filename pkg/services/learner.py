"""Internal few-shot learner: weighted ridge loss, its gradient, and
steepest descent with exact line search.

  L(tau) = 1/2 sum_t gamma_t ||w_t * (x_t (*) tau - e_t)||^2 + lam/2 ||tau||^2
  g      = sum_t gamma_t x_t (*)^T (w_t^2 * (x_t (*) tau - e_t)) + lam tau
  alpha  = ||g||^2 / (sum_t gamma_t ||w_t * (x_t (*) g)||^2 + lam ||g||^2)
  tau'   = tau - alpha g
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from models.learner import IterationRecord, LearnerProblem, SolveReport
from .errors import NumericError
from .flop_model import sd_flops
from .tensor_ops import FilterWeights, Tensor, conv2d, conv2d_transpose, norm_sq

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DescentStep:
    """Intermediates of one iteration, enough to differentiate it"""
    iteration: int
    tau: FilterWeights
    residuals: Tuple[Tensor, ...]
    weighted: Tuple[Tensor, ...]
    gradient: FilterWeights
    projections: Tuple[Tensor, ...]
    grad_sq: float
    curvature: float
    alpha: float
    loss: float


def residuals(problem: LearnerProblem, tau: FilterWeights) -> List[Tensor]:
    return [conv2d(sample.features, tau) - sample.labels for sample in problem.samples]


def _loss(problem: LearnerProblem, tau: FilterWeights, res: List[Tensor]) -> float:
    data_term = 0.0
    for sample, r in zip(problem.samples, res):
        data_term += sample.global_weight * norm_sq(sample.importance * r)
    return 0.5 * data_term + 0.5 * problem.lam * norm_sq(tau)


def _gradient(problem: LearnerProblem, tau: FilterWeights,
              res: List[Tensor]) -> Tuple[FilterWeights, List[Tensor]]:
    weighted = [sample.global_weight * sample.importance ** 2 * r
                for sample, r in zip(problem.samples, res)]
    g = problem.lam * tau
    for sample, s in zip(problem.samples, weighted):
        g = g + conv2d_transpose(s, sample.features, problem.kernel_size)
    return g, weighted


def _curvature(problem: LearnerProblem, g: FilterWeights) -> Tuple[float, List[Tensor]]:
    projections = [conv2d(sample.features, g) for sample in problem.samples]
    curvature = 0.0
    for sample, q in zip(problem.samples, projections):
        curvature += sample.global_weight * norm_sq(sample.importance * q)
    return curvature + problem.lam * norm_sq(g), projections


def loss(problem: LearnerProblem, tau: FilterWeights) -> float:
    """Evaluate the internal loss at tau"""
    tau = problem.check_filter(tau)
    return _loss(problem, tau, residuals(problem, tau))


def gradient(problem: LearnerProblem, tau: FilterWeights) -> FilterWeights:
    """Gradient of the internal loss at tau"""
    tau = problem.check_filter(tau)
    g, _ = _gradient(problem, tau, residuals(problem, tau))
    return g


def step_length(problem: LearnerProblem, g: FilterWeights) -> Optional[float]:
    """Exact line-search step along -g; None signals a zero gradient (converged)"""
    g = problem.check_filter(g)
    grad_sq = norm_sq(g)
    if grad_sq == 0.0:
        return None
    curvature, _ = _curvature(problem, g)
    if not curvature > 0.0 or not math.isfinite(curvature):
        raise NumericError(f"step length denominator is {curvature}, expected a positive finite value")
    return grad_sq / curvature


def descend(problem: LearnerProblem, tau0: FilterWeights, iters: int, grad_tol: float = 0.0,
            on_step: Optional[Callable[[DescentStep], None]] = None) -> Tuple[FilterWeights, SolveReport]:
    """Run up to iters steepest-descent iterations from tau0.

    on_step, when given, receives the intermediates of every accepted step.
    Iteration stops early once ||g|| is zero or at most grad_tol.
    """
    if iters < 0:
        raise ValueError(f"iteration count must be nonnegative, got {iters}")
    tau = problem.check_filter(tau0)
    start = time.perf_counter()
    records: List[IterationRecord] = []
    converged = False
    try:
        for iteration in range(iters):
            res = residuals(problem, tau)
            current_loss = _loss(problem, tau, res)
            if not math.isfinite(current_loss):
                raise NumericError(f"loss became {current_loss} at iteration {iteration}", iteration=iteration)
            g, weighted = _gradient(problem, tau, res)
            grad_sq = norm_sq(g)
            grad_norm = math.sqrt(grad_sq)
            if grad_sq == 0.0 or grad_norm <= grad_tol:
                converged = True
                logger.debug(f"Gradient norm {grad_norm:.3e} at iteration {iteration}, stopping")
                break
            curvature, projections = _curvature(problem, g)
            if not curvature > 0.0 or not math.isfinite(curvature):
                raise NumericError(
                    f"step length denominator is {curvature} at iteration {iteration}", iteration=iteration
                )
            alpha = grad_sq / curvature
            next_tau = tau - alpha * g
            if not np.all(np.isfinite(next_tau)):
                raise NumericError(f"non-finite filter after iteration {iteration}", iteration=iteration)
            if on_step is not None:
                on_step(DescentStep(
                    iteration=iteration, tau=tau, residuals=tuple(res), weighted=tuple(weighted),
                    gradient=g, projections=tuple(projections), grad_sq=grad_sq,
                    curvature=curvature, alpha=alpha, loss=current_loss,
                ))
            records.append(IterationRecord(loss=current_loss, alpha=alpha, grad_norm=grad_norm))
            logger.debug(f"iter {iteration}: loss={current_loss:.6e} alpha={alpha:.6e} |g|={grad_norm:.3e}")
            tau = next_tau
    except NumericError as e:
        logger.error(f"Steepest descent failed: {str(e)}")
        raise

    report = SolveReport(
        method="sd",
        iterations=records,
        iterations_run=len(records),
        converged=converged,
        final_loss=_loss(problem, tau, residuals(problem, tau)),
        elapsed_s=time.perf_counter() - start,
        flop_estimate=sd_flops(problem.height, problem.width, problem.kernel_size, problem.in_channels,
                               problem.out_channels, len(problem.samples), len(records)),
    )
    return tau, report


def solve_sd(problem: LearnerProblem, tau0: FilterWeights, iters: int,
             grad_tol: float = 0.0) -> Tuple[FilterWeights, SolveReport]:
    """Steepest descent with exact line search, warm-started from tau0"""
    tau, report = descend(problem, tau0, iters, grad_tol)
    logger.debug(f"SD finished {report.iterations_run}/{iters} iterations, loss {report.final_loss:.6e}")
    return tau, report
