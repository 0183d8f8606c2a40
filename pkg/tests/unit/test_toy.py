import os
import shutil
import tempfile
import unittest

import numpy as np
import pytest
from pydantic import ValidationError

from models.memory import MemoryConfig
from models.toy import ToyTrainConfig
from services.errors import DimensionError
from services.meta_toy import METRIC_COLUMNS, evaluate_toy, run_inference, train_toy
from services.toy_data import average_pool, generate_sequence, iou, mixing_matrix
from services.toy_modules import ToyModules, bce_with_logits, load_modules

SMALL = dict(steps=1, eval_sequences=1, eval_length=3, sequence_length=3, n_init=2, n_update=1)


class TestToyData(unittest.TestCase):
    def test_deterministic(self):
        a = generate_sequence(7, 16, 16, 8, 4)
        b = generate_sequence(7, 16, 16, 8, 4)
        for x, y in zip(a.features + a.masks, b.features + b.masks):
            np.testing.assert_array_equal(x, y)

    def test_shapes(self):
        sequence = generate_sequence(0, 12, 20, 5, 2)
        self.assertEqual(len(sequence), 2)
        self.assertEqual(sequence.features[0].shape, (12, 20, 5))
        self.assertEqual(sequence.masks[0].shape, (12, 20, 1))
        self.assertEqual(sequence.image_size, (20, 12))

    def test_needs_two_frames(self):
        with self.assertRaises(ValueError):
            generate_sequence(0, 16, 16, 8, 1)

    def test_small_frames_rejected(self):
        with self.assertRaises(DimensionError):
            generate_sequence(0, 4, 16, 8, 3)

    def test_target_present(self):
        sequence = generate_sequence(3, 16, 16, 8, 6)
        for mask in sequence.masks:
            self.assertGreater(mask.sum(), 0)

    def test_indicator_recovers_target(self):
        for seed in range(5):
            sequence = generate_sequence(seed, 32, 32, 8, 8)
            scores = [iou(ind, mask[..., 0]) for ind, mask in zip(sequence.indicators, sequence.masks)]
            self.assertGreaterEqual(float(np.mean(scores)), 0.8, msg=f"seed {seed}")

    def test_mixing_orthogonal(self):
        q = mixing_matrix(6, mixing_seed=3)
        np.testing.assert_allclose(q @ q.T, np.eye(6), atol=1e-12)

    def test_average_pool(self):
        array = np.arange(16, dtype=float).reshape(4, 4, 1)
        pooled = average_pool(array, 2)
        np.testing.assert_array_equal(pooled[..., 0], [[2.5, 4.5], [10.5, 12.5]])
        with self.assertRaises(DimensionError):
            average_pool(np.ones((5, 4, 1)), 2)


class TestIou(unittest.TestCase):
    def test_identical(self):
        mask = np.zeros((4, 4))
        mask[1:3, 1:3] = 1
        self.assertEqual(iou(mask, mask), 1.0)

    def test_disjoint(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        a[0, 0] = 1
        b[3, 3] = 1
        self.assertEqual(iou(a, b), 0.0)

    def test_partial_overlap(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        a[0, 0:2] = 1
        b[0, 1:3] = 1
        self.assertAlmostEqual(iou(a, b), 1.0 / 3.0, delta=1e-12)

    def test_both_empty(self):
        self.assertEqual(iou(np.zeros((3, 3)), np.zeros((3, 3))), 1.0)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            iou(np.zeros((3, 3)), np.zeros((3, 4)))


class TestToyModules(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_fixed_labels_need_single_channel(self):
        with self.assertRaises(DimensionError):
            ToyModules.initialize(4, 8, 3, fixed_labels=True)

    def test_fixed_labels_are_mask(self):
        modules = ToyModules.initialize(1, 8, 3, fixed_labels=True)
        mask = np.zeros((5, 5, 1))
        mask[2, 2] = 1
        labels, pre = modules.labels(mask)
        np.testing.assert_array_equal(labels, mask)
        self.assertIsNone(pre)
        np.testing.assert_array_equal(modules.importance(mask), np.ones((5, 5, 1)))

    def test_learned_label_shapes(self):
        modules = ToyModules.initialize(4, 8, 3)
        labels, pre = modules.labels(np.ones((6, 6, 1)))
        self.assertEqual(labels.shape, (6, 6, 4))
        self.assertTrue(np.all(labels >= 0))
        self.assertEqual(modules.importance(np.ones((6, 6, 1))).shape, (6, 6, 4))

    def test_lambda_parameter(self):
        modules = ToyModules.initialize(4, 8, 3, lam=0.2)
        self.assertTrue(modules.learns_lambda)
        self.assertAlmostEqual(modules.lam(0.05), 0.2, delta=1e-12)
        self.assertEqual(ToyModules.initialize(4, 8, 3).lam(0.05), 0.05)

    def test_save_and_load(self):
        modules = ToyModules.initialize(4, 8, 3, seed=5, lam=0.1)
        modules.save(self.test_dir)
        self.assertTrue(os.path.exists(os.path.join(self.test_dir, "modules.json")))
        loaded = load_modules(self.test_dir)
        self.assertEqual(set(loaded.params), set(modules.params))
        for name, value in modules.params.items():
            np.testing.assert_array_equal(loaded.params[name], value)
        self.assertFalse(loaded.fixed_labels)

    def test_uniform_weights_have_no_predictor(self):
        modules = ToyModules.initialize(4, 8, 3, learn_weights=False)
        self.assertFalse(modules.learns_weights)
        self.assertNotIn("weight_kernel", modules.params)
        self.assertIn("label_kernel", modules.params)
        np.testing.assert_array_equal(modules.importance(np.ones((6, 6, 1))), np.ones((6, 6, 4)))
        self.assertTrue(ToyModules.initialize(4, 8, 3).learns_weights)

    def test_uniform_weights_save_and_load(self):
        ToyModules.initialize(4, 8, 3, seed=2, learn_weights=False).save(self.test_dir)
        loaded = load_modules(self.test_dir)
        self.assertFalse(loaded.learns_weights)
        self.assertEqual(loaded.out_channels, 4)

    def test_uniform_weights_keep_label_init(self):
        full = ToyModules.initialize(4, 8, 3, seed=3)
        uniform = ToyModules.initialize(4, 8, 3, seed=3, learn_weights=False)
        for name in uniform.params:
            np.testing.assert_array_equal(uniform.params[name], full.params[name])

    def test_bce_gradient(self):
        logits = np.array([[[0.0]], [[2.0]]])
        target = np.array([[[1.0]], [[0.0]]])
        value, grad = bce_with_logits(logits, target)
        self.assertAlmostEqual(value, (np.log(2.0) + np.log1p(np.exp(2.0))) / 2, delta=1e-12)
        np.testing.assert_allclose(grad.ravel(), [-0.25, 0.5 / (1 + np.exp(-2.0))], atol=1e-12)


class TestInference(unittest.TestCase):
    def test_long_sequence_bounds_memory(self):
        modules = ToyModules.initialize(4, 8, 3, seed=1)
        sequence = generate_sequence(2, 16, 16, 8, 50)
        result = run_inference(modules, sequence, MemoryConfig(n_init=5))
        self.assertEqual(len(result.masks), 50)
        self.assertEqual(len(result.ious), 49)
        self.assertLessEqual(len(result.memory), 32)
        self.assertEqual(result.memory.frame_indices[0], 0)
        for value in result.ious:
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0)

    def test_evaluate_deterministic(self):
        modules = ToyModules.initialize(1, 8, 3, fixed_labels=True)
        sequences = [generate_sequence(s, 16, 16, 8, 3) for s in (0, 1)]
        first = evaluate_toy(modules, sequences, MemoryConfig(n_init=3))
        second = evaluate_toy(modules, sequences, MemoryConfig(n_init=3))
        self.assertEqual(first.per_sequence, second.per_sequence)
        self.assertEqual(len(first.per_sequence), 2)
        self.assertLessEqual(first.minimum, first.median)


class TestTraining(unittest.TestCase):
    def test_zero_steps_returns_initial_modules(self):
        config = ToyTrainConfig(steps=0)
        modules, metrics = train_toy(config)
        initial = ToyModules.initialize(config.out_channels, config.channels, config.kernel_size, seed=config.seed)
        for name, value in initial.params.items():
            np.testing.assert_array_equal(modules.params[name], value)
        self.assertEqual(list(metrics.columns), METRIC_COLUMNS)
        self.assertEqual(len(metrics), 0)

    def test_zero_learning_rate_keeps_params(self):
        config = ToyTrainConfig(learning_rate=0.0, **SMALL)
        modules, _ = train_toy(config)
        initial = ToyModules.initialize(config.out_channels, config.channels, config.kernel_size, seed=config.seed)
        for name, value in initial.params.items():
            np.testing.assert_array_equal(modules.params[name], value)

    def test_one_step_moves_label_and_weight_modules(self):
        config = ToyTrainConfig(**SMALL)
        modules, metrics = train_toy(config)
        initial = ToyModules.initialize(config.out_channels, config.channels, config.kernel_size, seed=config.seed)
        self.assertEqual(len(metrics), 1)
        row = metrics.iloc[0]
        self.assertTrue(np.isfinite(row["train_loss"]))
        self.assertGreater(row["grad_norm_E"], 0.0)
        self.assertGreater(row["grad_norm_W"], 0.0)
        self.assertGreaterEqual(row["test_iou"], 0.0)
        for name in ("label_kernel", "weight_kernel", "decoder_enc"):
            self.assertFalse(np.array_equal(modules.params[name], initial.params[name]), msg=name)

    def test_fixed_label_baseline_trains_decoder_only(self):
        config = ToyTrainConfig(out_channels=1, fixed_labels=True, **SMALL)
        modules, metrics = train_toy(config)
        self.assertNotIn("label_kernel", modules.params)
        self.assertEqual(metrics.iloc[0]["grad_norm_E"], 0.0)
        self.assertEqual(metrics.iloc[0]["grad_norm_W"], 0.0)

    def test_uniform_weights_train_labels_only(self):
        config = ToyTrainConfig(learn_weights=False, **SMALL)
        modules, metrics = train_toy(config)
        initial = ToyModules.initialize(config.out_channels, config.channels, config.kernel_size, seed=config.seed,
                                        learn_weights=False)
        self.assertNotIn("weight_kernel", modules.params)
        self.assertGreater(metrics.iloc[0]["grad_norm_E"], 0.0)
        self.assertEqual(metrics.iloc[0]["grad_norm_W"], 0.0)
        self.assertFalse(np.array_equal(modules.params["label_kernel"], initial.params["label_kernel"]))

    def test_learned_lambda_moves(self):
        config = ToyTrainConfig(learn_lambda=True, **SMALL)
        modules, _ = train_toy(config)
        self.assertTrue(modules.learns_lambda)
        self.assertNotEqual(modules.lam(config.lam), config.lam)

    def test_even_kernel_rejected(self):
        with self.assertRaises(ValidationError):
            ToyTrainConfig(kernel_size=4)


@pytest.mark.slow
class TestLabelAblation(unittest.TestCase):
    def test_learned_labels_beat_fixed_labels(self):
        learned, fixed = [], []
        for seed in range(5):
            _, metrics = train_toy(ToyTrainConfig(out_channels=4, seed=seed, eval_every=0))
            learned.append(metrics["test_iou"].iloc[-1])
            _, metrics = train_toy(ToyTrainConfig(out_channels=1, fixed_labels=True, seed=seed, eval_every=0))
            fixed.append(metrics["test_iou"].iloc[-1])
        self.assertGreater(np.median(learned), np.median(fixed))

    def test_learned_weights_add_to_learned_labels(self):
        medians = {}
        variants = {
            "learned": dict(out_channels=4),
            "labels_only": dict(out_channels=4, learn_weights=False),
            "fixed": dict(out_channels=1, fixed_labels=True),
        }
        for name, overrides in variants.items():
            ious = []
            for seed in range(5):
                _, metrics = train_toy(ToyTrainConfig(seed=seed, eval_every=0, **overrides))
                ious.append(metrics["test_iou"].iloc[-1])
            medians[name] = np.median(ious)
        self.assertGreaterEqual(medians["learned"], medians["labels_only"])
        self.assertGreater(medians["labels_only"], medians["fixed"])


if __name__ == '__main__':
    unittest.main()
