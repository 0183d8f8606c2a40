"""Seeded property suites: convolution adjointness, convergence to the closed
form, finite-difference checks of the unrolled gradients, and primal/dual
agreement.
"""
import logging
from typing import Callable, Dict, List, Optional, get_args

import numpy as np

from models.learner import LearnerProblem, TrainingSample
from models.verification import Suite, SuiteResult, VerifyReport
from .exact_solvers import matrixize, solve_dual, solve_primal
from .instances import random_filter, random_problem
from .learner import DescentStep, descend, loss, solve_sd
from .learner_grad import backward, solve_sd_traced
from .tensor_ops import conv2d, conv2d_transpose, dot

logger = logging.getLogger(__name__)

TOLERANCES = {"adjoint": 1e-10, "oracle": 1e-6, "gradcheck": 1e-5, "woodbury": 1e-8}
DEFAULT_CASES = {"adjoint": 100, "oracle": 50, "gradcheck": 50, "woodbury": 50}
SUITE_ORDER = list(get_args(Suite))
BLOCKS = ("features", "labels", "importance", "lam", "tau0")
STEP_SCALES = (0.5, 0.9, 1.1, 1.5)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-6)


def adjoint_error(rng: np.random.Generator) -> float:
    height, width = rng.integers(1, 7, size=2)
    channels, outputs = rng.integers(1, 4, size=2)
    k = int(rng.choice([1, 3, 5]))
    x = rng.standard_normal((height, width, channels))
    tau = rng.standard_normal((k, k, channels, outputs))
    u = rng.standard_normal((height, width, outputs))
    lhs = dot(conv2d(x, tau), u)
    rhs = dot(tau, conv2d_transpose(u, x, k))
    problem = LearnerProblem((TrainingSample.uniform(x, u),), lam=0.0, kernel_size=k)
    return max(abs(lhs - rhs) / (1.0 + abs(lhs)), matrix_conv_error(problem, tau))


def step_is_optimal(problem: LearnerProblem, step: DescentStep) -> bool:
    """The exact step beats every scaled step c * alpha along the same direction"""
    best = loss(problem, step.tau - step.alpha * step.gradient)
    slack = 1e-12 * (1.0 + step.loss)
    return all(best <= loss(problem, step.tau - c * step.alpha * step.gradient) + slack for c in STEP_SCALES)


def oracle_error(rng: np.random.Generator, iterations: int = 100) -> float:
    """Relative loss gap between steepest descent and the primal optimum.

    inf when the loss ever increases or a step loses to one of the scaled steps.
    """
    problem = random_problem(rng, height=8, width=8, in_channels=4, out_channels=3, kernel_size=3,
                             samples=2, lam=0.1)
    steps: List[DescentStep] = []
    _, report = descend(problem, problem.zeros_filter(), iterations, on_step=steps.append)
    losses = [record.loss for record in report.iterations] + [report.final_loss]
    for before, after in zip(losses, losses[1:]):
        if after > before * (1.0 + 1e-12):
            return float("inf")
    if not all(step_is_optimal(problem, step) for step in steps):
        return float("inf")
    optimum = loss(problem, solve_primal(problem))
    return abs(report.final_loss - optimum) / (1.0 + optimum)


def woodbury_error(rng: np.random.Generator) -> float:
    height, width = rng.integers(2, 7, size=2)
    problem = random_problem(rng, height=int(height), width=int(width), in_channels=int(rng.integers(1, 4)),
                             out_channels=int(rng.integers(1, 4)), kernel_size=int(rng.choice([1, 3])),
                             samples=int(rng.integers(1, 3)), lam=float(rng.uniform(0.05, 1.0)))
    tau_primal = solve_primal(problem)
    tau_dual = solve_dual(problem)
    return float(np.max(np.abs(tau_dual - tau_primal) / (1.0 + np.abs(tau_primal))))


def _rebuild(problem: LearnerProblem, block: str, directions, step: float) -> LearnerProblem:
    if block == "lam":
        return LearnerProblem(problem.samples, lam=problem.lam + step * directions, kernel_size=problem.kernel_size)
    samples = []
    for sample, v in zip(problem.samples, directions):
        fields = dict(features=sample.features, labels=sample.labels, importance=sample.importance)
        fields[block] = fields[block] + step * v
        samples.append(TrainingSample(global_weight=sample.global_weight, **fields))
    return LearnerProblem(tuple(samples), lam=problem.lam, kernel_size=problem.kernel_size)


def directional_check(problem: LearnerProblem, tau0: np.ndarray, iters: int, upstream: np.ndarray,
                      block: str, rng: np.random.Generator) -> float:
    """Compare <grad, v> from backward with a central difference of <upstream, tau^N> along v"""
    _, tape = solve_sd_traced(problem, tau0, iters)
    grads = backward(tape, upstream)

    def objective(p: LearnerProblem, start: np.ndarray) -> float:
        tau, _ = solve_sd(p, start, iters)
        return dot(upstream, tau)

    if block == "tau0":
        v = rng.standard_normal(tau0.shape)
        h = 1e-5 * (1.0 + float(np.max(np.abs(tau0))))
        numeric = (objective(problem, tau0 + h * v) - objective(problem, tau0 - h * v)) / (2 * h)
        return relative_error(dot(grads.tau0, v), numeric)
    if block == "lam":
        h = 1e-5 * (1.0 + problem.lam)
        numeric = (objective(_rebuild(problem, "lam", 1.0, h), tau0)
                   - objective(_rebuild(problem, "lam", 1.0, -h), tau0)) / (2 * h)
        return relative_error(grads.lam, numeric)

    current = [getattr(sample, block) for sample in problem.samples]
    directions = [rng.standard_normal(c.shape) for c in current]
    h = 1e-5 * (1.0 + max(float(np.max(np.abs(c))) for c in current))
    numeric = (objective(_rebuild(problem, block, directions, h), tau0)
               - objective(_rebuild(problem, block, directions, -h), tau0)) / (2 * h)
    analytic = sum(dot(g, v) for g, v in zip(getattr(grads, block), directions))
    return relative_error(analytic, numeric)


def gradcheck_error(rng: np.random.Generator, iters: int = 3) -> float:
    """Worst relative error over all five gradient blocks of one random instance"""
    problem = random_problem(rng, height=4, width=4, in_channels=2, out_channels=2, kernel_size=3,
                             samples=2, lam=0.1)
    tau0 = random_filter(rng, problem, scale=0.1)
    upstream = random_filter(rng, problem)
    return max(directional_check(problem, tau0, iters, upstream, block, rng) for block in BLOCKS)


_CASES: Dict[str, Callable[[np.random.Generator], float]] = {
    "adjoint": adjoint_error,
    "oracle": oracle_error,
    "gradcheck": gradcheck_error,
    "woodbury": woodbury_error,
}


def run_suite(suite: str, seed: int = 0, cases: Optional[int] = None) -> SuiteResult:
    """Run one property suite; each case draws from its own seeded generator"""
    if suite not in _CASES:
        raise ValueError(f"unknown suite {suite!r}, expected one of {SUITE_ORDER}")
    count = DEFAULT_CASES[suite] if cases is None else cases
    tolerance = TOLERANCES[suite]
    errors: List[float] = []
    try:
        for case in range(count):
            rng = np.random.default_rng([seed, SUITE_ORDER.index(suite), case])
            errors.append(float(_CASES[suite](rng)))
    except Exception as e:
        logger.error(f"Suite {suite} failed at case {len(errors)}: {str(e)}")
        raise
    failed = sum(1 for error in errors if not error <= tolerance)
    result = SuiteResult(
        suite=suite,
        cases=count,
        passed=count - failed,
        failed=failed,
        max_error=max(errors, default=0.0),
        tolerance=tolerance,
    )
    log = logger.info if result.ok else logger.warning
    log(f"Suite {suite}: {result.passed}/{count} passed, max error {result.max_error:.3e}")
    return result


def verify(suite: str = "all", seed: int = 0, cases: Optional[int] = None) -> VerifyReport:
    names = SUITE_ORDER if suite == "all" else [suite]
    return VerifyReport(seed=seed, suites=[run_suite(name, seed, cases) for name in names])


def matrix_conv_error(problem: LearnerProblem, tau: np.ndarray) -> float:
    """Largest gap between X vec(tau) and conv2d over the samples of a problem"""
    m = matrixize(problem)
    stacked = np.concatenate([conv2d(s.features, tau).reshape(-1, problem.out_channels) for s in problem.samples])
    return float(np.max(np.abs(m.X @ m.vec(tau) - stacked)))
