import unittest

import numpy as np

from models.learner import LearnerProblem, TrainingSample
from services.errors import CapacityError, NumericError
from services.exact_solvers import (matrix_loss, matrixize, solve_dual, solve_exact, solve_primal)
from services.instances import random_filter, random_problem, scalar_problem
from services.learner import gradient, loss
from services.tensor_ops import conv2d


class TestMatrixize(unittest.TestCase):
    def test_scalar(self):
        m = matrixize(scalar_problem(2.0, 1.0))
        np.testing.assert_array_equal(m.X, [[2.0]])

    def test_zero_features(self):
        sample = TrainingSample.uniform(np.zeros((3, 3, 2)), np.ones((3, 3, 1)))
        m = matrixize(LearnerProblem((sample,), lam=0.1))
        self.assertFalse(np.any(m.X))

    def test_product_matches_conv(self):
        rng = np.random.default_rng(0)
        problem = random_problem(rng, height=3, width=3, in_channels=2, out_channels=2, samples=2)
        m = matrixize(problem)
        for _ in range(20):
            tau = random_filter(rng, problem)
            stacked = np.concatenate([conv2d(s.features, tau).reshape(-1, 2) for s in problem.samples])
            np.testing.assert_allclose(m.X @ m.vec(tau), stacked, rtol=0, atol=1e-12)

    def test_matrix_loss_matches(self):
        rng = np.random.default_rng(1)
        problem = random_problem(rng, height=4, width=4, in_channels=3, out_channels=2, samples=2)
        tau = random_filter(rng, problem)
        direct = loss(problem, tau)
        self.assertLessEqual(abs(matrix_loss(matrixize(problem), tau) - direct) / direct, 1e-12)

    def test_budget(self):
        problem = random_problem(np.random.default_rng(2), height=4, width=4, in_channels=2, samples=2)
        with self.assertRaises(CapacityError) as ctx:
            matrixize(problem, budget=100)
        self.assertEqual(ctx.exception.size, 32 * 18)
        self.assertEqual(ctx.exception.budget, 100)


class TestClosedForms(unittest.TestCase):
    def test_scalar_primal(self):
        tau = solve_primal(scalar_problem(1.0, 3.0, w=2.0, lam=1.0))
        self.assertAlmostEqual(float(tau.ravel()[0]), 2.4, delta=1e-12)

    def test_scalar_dual(self):
        tau = solve_dual(scalar_problem(1.0, 3.0, w=2.0, lam=1.0))
        self.assertAlmostEqual(float(tau.ravel()[0]), 2.4, delta=1e-12)

    def test_zero_labels(self):
        rng = np.random.default_rng(3)
        sample = TrainingSample.uniform(rng.standard_normal((4, 4, 2)), np.zeros((4, 4, 2)))
        problem = LearnerProblem((sample,), lam=0.5)
        np.testing.assert_allclose(solve_primal(problem), 0.0, atol=1e-15)
        np.testing.assert_allclose(solve_dual(problem), 0.0, atol=1e-15)

    def test_lambda_must_be_positive(self):
        with self.assertRaises(ValueError):
            solve_primal(scalar_problem(1.0, 1.0, lam=0.0))
        with self.assertRaises(ValueError):
            solve_dual(scalar_problem(1.0, 1.0, lam=0.0))

    def test_stationary_point(self):
        rng = np.random.default_rng(4)
        problem = random_problem(rng, height=6, width=6, in_channels=3, out_channels=2, samples=2)
        tau = solve_primal(problem)
        m = matrixize(problem)
        reference = np.linalg.norm(m.X.T @ (m.weights ** 2 * m.labels))
        self.assertLessEqual(np.linalg.norm(gradient(problem, tau)), 1e-8 * (1 + reference))

    def test_local_optimality(self):
        rng = np.random.default_rng(5)
        problem = random_problem(rng, height=6, width=6, in_channels=3, out_channels=2, samples=2)
        tau = solve_primal(problem)
        best = loss(problem, tau)
        for _ in range(100):
            self.assertLessEqual(best, loss(problem, tau + 1e-3 * rng.standard_normal(tau.shape)))

    def test_primal_dual_agree(self):
        for seed in range(50):
            problem = random_problem(np.random.default_rng(seed), height=4, width=3, in_channels=2,
                                     out_channels=2, samples=2, lam=0.2)
            tau_primal = solve_primal(problem)
            tau_dual = solve_dual(problem)
            error = np.max(np.abs(tau_dual - tau_primal) / (1 + np.abs(tau_primal)))
            self.assertLessEqual(error, 1e-8, msg=f"seed {seed}")

    def test_joint_system_matches_channels(self):
        """Solving the joint K^2CD system equals the per-channel solves"""
        rng = np.random.default_rng(6)
        problem = random_problem(rng, height=3, width=3, in_channels=2, out_channels=3, samples=2)
        m = matrixize(problem)
        cols, outputs = m.X.shape[1], m.out_channels
        system = np.zeros((cols * outputs, cols * outputs))
        rhs = np.zeros(cols * outputs)
        for d in range(outputs):
            sq = m.weights[:, d] ** 2
            block = slice(d * cols, (d + 1) * cols)
            system[block, block] = m.X.T @ (sq[:, None] * m.X)
            rhs[block] = m.X.T @ (sq * m.labels[:, d])
        joint = np.linalg.solve(system + m.lam * np.eye(cols * outputs), rhs)
        per_channel = m.vec(solve_primal(problem))
        np.testing.assert_allclose(joint.reshape(outputs, cols).T, per_channel, rtol=1e-9, atol=1e-12)

    def test_ill_conditioned(self):
        """Huge features against a tiny lambda trip the condition guard"""
        sample = TrainingSample.uniform(np.full((2, 2, 1), 1e8), np.ones((2, 2, 1)))
        problem = LearnerProblem((sample,), lam=1e-8, kernel_size=1)
        with self.assertRaises(NumericError) as ctx:
            solve_dual(problem)
        self.assertGreater(ctx.exception.condition, 1e12)

    def test_solve_exact_report(self):
        problem = random_problem(np.random.default_rng(7))
        tau, report = solve_exact(problem, "dual")
        self.assertEqual(report.method, "dual")
        self.assertAlmostEqual(report.final_loss, loss(problem, tau), delta=1e-10)
        self.assertGreater(report.flop_estimate, 0)


if __name__ == '__main__':
    unittest.main()
