"""Reverse-mode differentiation through unrolled steepest descent.

solve_sd_traced runs the same iteration as solve_sd and keeps every step's
intermediates. backward walks the steps in reverse, differentiating the step
length quotient fully (numerator and denominator).
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from models.learner import LearnerProblem, SolveReport
from .errors import DimensionError
from .learner import DescentStep, descend
from .tensor_ops import FilterWeights, Tensor, conv2d, conv2d_input_adjoint, conv2d_transpose, dot

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LearnerTape:
    problem: LearnerProblem
    tau0: FilterWeights
    steps: Tuple[DescentStep, ...]
    tau: FilterWeights
    report: SolveReport

    def replay(self) -> FilterWeights:
        """Re-apply the recorded updates to tau0; matches the forward result bitwise"""
        tau = self.tau0
        for step in self.steps:
            tau = tau - step.alpha * step.gradient
        return tau


@dataclass(frozen=True, eq=False)
class LearnerGradients:
    """Cotangents of every learner input, each shaped like its primal"""
    features: Tuple[Tensor, ...]
    labels: Tuple[Tensor, ...]
    importance: Tuple[Tensor, ...]
    lam: float
    tau0: FilterWeights


def solve_sd_traced(problem: LearnerProblem, tau0: FilterWeights, iters: int,
                    grad_tol: float = 0.0) -> Tuple[FilterWeights, LearnerTape]:
    steps: List[DescentStep] = []
    tau0 = problem.check_filter(tau0)
    tau, report = descend(problem, tau0, iters, grad_tol, on_step=steps.append)
    return tau, LearnerTape(problem=problem, tau0=tau0, steps=tuple(steps), tau=tau, report=report)


def backward(tape: LearnerTape, upstream: FilterWeights) -> LearnerGradients:
    """Pull a cotangent of the final filter back to all learner inputs"""
    upstream = np.asarray(upstream)
    if upstream.shape != tape.tau.shape:
        raise DimensionError(f"upstream shape {upstream.shape} does not match the filter shape {tape.tau.shape}")

    problem = tape.problem
    samples = problem.samples
    lam = problem.lam
    x_bar = [np.zeros_like(s.features) for s in samples]
    e_bar = [np.zeros_like(s.labels) for s in samples]
    w_bar = [np.zeros_like(s.importance) for s in samples]
    lam_bar = 0.0
    tau_bar = upstream.astype(tape.tau.dtype, copy=True)

    for step in reversed(tape.steps):
        g = step.gradient
        # tau' = tau - alpha g
        alpha_bar = -dot(tau_bar, g)
        g_bar = -step.alpha * tau_bar

        # alpha = gg / den
        den_bar = -alpha_bar * step.alpha / step.curvature
        gg_bar = alpha_bar / step.curvature + den_bar * lam
        lam_bar += den_bar * step.grad_sq

        # den = sum_t gamma_t ||w_t q_t||^2 + lam gg,  q_t = x_t (*) g
        q_bars = []
        for t, (sample, q) in enumerate(zip(samples, step.projections)):
            coef = 2.0 * den_bar * sample.global_weight
            w_bar[t] += coef * sample.importance * q ** 2
            q_bars.append(coef * sample.importance ** 2 * q)
        g_bar = g_bar + 2.0 * gg_bar * g
        for t, (sample, q_bar) in enumerate(zip(samples, q_bars)):
            g_bar = g_bar + conv2d_transpose(q_bar, sample.features, problem.kernel_size)
            x_bar[t] += conv2d_input_adjoint(q_bar, g)

        # g = lam tau + sum_t x_t (*)^T s_t,  s_t = gamma_t w_t^2 r_t
        lam_bar += dot(g_bar, step.tau)
        tau_bar = tau_bar + lam * g_bar
        for t, sample in enumerate(samples):
            s = step.weighted[t]
            r = step.residuals[t]
            s_bar = conv2d(sample.features, g_bar)
            x_bar[t] += conv2d_input_adjoint(s, g_bar)
            w_bar[t] += s_bar * 2.0 * sample.global_weight * sample.importance * r
            r_bar = s_bar * sample.global_weight * sample.importance ** 2
            # r_t = x_t (*) tau - e_t
            e_bar[t] -= r_bar
            tau_bar = tau_bar + conv2d_transpose(r_bar, sample.features, problem.kernel_size)
            x_bar[t] += conv2d_input_adjoint(r_bar, step.tau)

    return LearnerGradients(
        features=tuple(x_bar),
        labels=tuple(e_bar),
        importance=tuple(w_bar),
        lam=float(lam_bar),
        tau0=tau_bar,
    )
