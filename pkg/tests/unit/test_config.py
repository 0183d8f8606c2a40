import logging
import os
import unittest

from pydantic import ValidationError

from config.settings import LOG_FORMAT, AppSettings, configure_logging
from models.learner import DEFAULT_LAMBDA
from services.exact_solvers import DEFAULT_MATRIX_BUDGET


class TestSettings(unittest.TestCase):
    def test_defaults(self):
        settings = AppSettings()
        self.assertEqual(settings.default_lambda, DEFAULT_LAMBDA)
        self.assertEqual(settings.matrix_budget, DEFAULT_MATRIX_BUDGET)
        self.assertEqual(settings.reports_dir, "reports")
        self.assertEqual(settings.log_format, LOG_FORMAT)

    def test_overrides(self):
        settings = AppSettings(matrix_budget=1000, reports_dir="out", log_level="DEBUG")
        self.assertEqual(settings.matrix_budget, 1000)
        self.assertEqual(settings.reports_dir, "out")

    def test_environment_ignored(self):
        os.environ["MATRIX_BUDGET"] = "7"
        try:
            self.assertEqual(AppSettings().matrix_budget, DEFAULT_MATRIX_BUDGET)
        finally:
            del os.environ["MATRIX_BUDGET"]

    def test_invalid_values(self):
        with self.assertRaises(ValidationError):
            AppSettings(matrix_budget=0)
        with self.assertRaises(ValidationError):
            AppSettings(default_lambda=0.0)

    def test_configure_logging(self):
        configure_logging(AppSettings(log_level="WARNING"))
        self.assertEqual(logging.getLogger().level, logging.WARNING)
        configure_logging(AppSettings(log_level="DEBUG"))
        self.assertEqual(logging.getLogger().level, logging.DEBUG)


if __name__ == '__main__':
    unittest.main()
