import unittest

import numpy as np
import pytest
from pydantic import ValidationError

from models.bench import ComplexityConfig
from services.complexity_bench import (PARITY_TOLERANCE, fit_slope, matrix_entries, parity_check, records_frame,
                                       run_case, run_sweep)
from services.flop_model import AXES, dual_flops, flop_estimate, primal_flops, sd_flops

UNIT = dict(height=1, width=1, kernel_size=1, in_channels=1, out_channels=1, samples=1)


class TestFlopModel(unittest.TestCase):
    def test_sd_reference_config(self):
        self.assertEqual(flop_estimate(ComplexityConfig()), 69120)

    def test_unit_dimensions(self):
        self.assertEqual(primal_flops(**UNIT), 2)
        self.assertEqual(dual_flops(**UNIT), 2)
        self.assertEqual(sd_flops(iterations=1, **UNIT), 1)

    def test_dual_dominates_primal_at_reference(self):
        self.assertGreater(flop_estimate(ComplexityConfig(method="dual")),
                           flop_estimate(ComplexityConfig(method="primal")))

    def test_sd_linear_in_samples(self):
        values = [1, 2, 4, 8]
        flops = [flop_estimate(ComplexityConfig(samples=m)) for m in values]
        self.assertAlmostEqual(fit_slope(values, flops), 1.0, delta=1e-12)

    def test_primal_superquadratic_in_channels(self):
        values = [2, 4, 8, 16]
        flops = [flop_estimate(ComplexityConfig(method="primal", in_channels=c)) for c in values]
        slope = fit_slope(values, flops)
        self.assertGreater(slope, 2.0)
        self.assertLess(slope, 3.0)

    def test_matches_rederived_counts(self):
        """Twenty seeded configs per method against counts written from the patch/row sizes"""
        oracles = {
            "sd": lambda h, w, k, c, d, m, n: (h * w * m) * (k * k * c) * d * n,
            "primal": lambda h, w, k, c, d, m, n: d * (k * k * c) ** 3 + d * (k * k * c) ** 2 * (h * w * m),
            "dual": lambda h, w, k, c, d, m, n: d * (h * w * m) ** 3 + d * (k * k * c) * (h * w * m) ** 2,
        }
        rng = np.random.default_rng(0)
        for method, oracle in oracles.items():
            for _ in range(20):
                h, w, c, d, m, n = (int(v) for v in rng.integers(1, 33, size=6))
                k = int(rng.choice([1, 3, 5, 7]))
                config = ComplexityConfig(height=h, width=w, kernel_size=k, in_channels=c, out_channels=d,
                                          samples=m, iterations=n, method=method)
                self.assertEqual(flop_estimate(config), oracle(h, w, k, c, d, m, n), msg=f"{method} {config}")

    def test_axes_cover_config(self):
        fields = set(ComplexityConfig.model_fields)
        self.assertTrue(set(AXES.values()) <= fields)


class TestFitSlope(unittest.TestCase):
    def test_power_law(self):
        self.assertAlmostEqual(fit_slope([1, 2, 4], [3, 12, 48]), 2.0, delta=1e-12)

    def test_too_few_points(self):
        self.assertIsNone(fit_slope([4], [10]))
        self.assertIsNone(fit_slope([4, 4], [10, 11]))


class TestRunCase(unittest.TestCase):
    def test_skips_over_budget(self):
        config = ComplexityConfig(method="dual", height=16, width=16, samples=4)
        self.assertGreater(matrix_entries(config), 1000)
        record = run_case(config, budget=1000)
        self.assertIsNotNone(record.skipped)
        self.assertIsNone(record.time_ns_median)
        self.assertEqual(record.flop_estimate, flop_estimate(config))

    def test_sd_needs_no_matrix(self):
        self.assertEqual(matrix_entries(ComplexityConfig()), 0)

    def test_timed_case(self):
        config = ComplexityConfig(height=4, width=4, in_channels=2, out_channels=2, repetitions=3, warmup=1)
        record = run_case(config)
        self.assertIsNone(record.skipped)
        self.assertGreater(record.time_ns_median, 0)
        self.assertLessEqual(record.time_ns_min, record.time_ns_median)

    def test_repetitions_floor(self):
        with self.assertRaises(ValidationError):
            ComplexityConfig(repetitions=2)

    def test_parity_check(self):
        self.assertLessEqual(parity_check(0), PARITY_TOLERANCE)


class TestRunSweep(unittest.TestCase):
    def test_small_sweep(self):
        base = ComplexityConfig(method="primal", height=4, width=4, in_channels=2, out_channels=2,
                                repetitions=3, warmup=0)
        result = run_sweep(base, "M", [1, 2])
        self.assertEqual(len(result.records), 2)
        self.assertEqual([r.config.samples for r in result.records], [1, 2])
        self.assertIsNotNone(result.flop_slope)
        self.assertLessEqual(result.parity_error, PARITY_TOLERANCE)
        frame = records_frame(result.records)
        self.assertEqual(list(frame["samples"]), [1, 2])
        self.assertIn("time_ns_median", frame.columns)
        self.assertEqual(list(frame["flops"]), [r.flop_estimate for r in result.records])
        self.assertNotIn("flop_estimate", frame.columns)

    def test_unknown_axis(self):
        with self.assertRaises(ValueError):
            run_sweep(ComplexityConfig(), "Z", [1, 2])

    def test_invalid_value(self):
        with self.assertRaises(ValidationError):
            run_sweep(ComplexityConfig(), "K", [2])


@pytest.mark.slow
class TestTimingScaling(unittest.TestCase):
    def test_sd_time_linear_in_samples(self):
        base = ComplexityConfig(height=32, width=32, kernel_size=3, in_channels=16, out_channels=4, iterations=10,
                                repetitions=7, warmup=2)
        result = run_sweep(base, "M", [1, 2, 4, 8, 16, 32])
        times = [r.time_ns_median for r in result.records]
        for before, after in zip(times, times[1:]):
            self.assertGreaterEqual(after / before, 1.6)
            self.assertLessEqual(after / before, 2.6)
        self.assertAlmostEqual(result.time_slope, 1.0, delta=0.3)


if __name__ == '__main__':
    unittest.main()
