"""Tests for evaluation reports, batching and multi-mode fusion."""

import math
import unittest

import numpy as np
import numpy.testing as npt
import pytest

from sttformer.core.tensor import precision
from sttformer.data.synthetic import make_synthetic_dataset
from sttformer.errors import ConfigError, FusionError, LabelError, ShapeError
from sttformer.model.config import tiny_config
from sttformer.model.network import SttFormer
from sttformer.training.evaluate import (
    THREADS_ENV,
    batch_slices,
    evaluate,
    make_batch,
    predict_logits,
    report_from_logits,
    worker_threads,
)
from sttformer.training.fusion import fuse_modes, fused_scores, fusion_report


class TestReport(unittest.TestCase):
    def test_perfect_predictions(self):
        labels = [0, 1, 2, 1]
        report = report_from_logits(np.eye(3)[labels] * 5.0, labels, 3)
        self.assertEqual(report.top1, 1.0)
        npt.assert_array_equal(report.confusion, np.diag([1, 2, 1]))
        npt.assert_array_equal(report.per_class, [1.0, 1.0, 1.0])

    def test_confusion_rows_sum_to_class_counts(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 4, 50)
        report = report_from_logits(rng.standard_normal((50, 4)), labels, 4)
        npt.assert_array_equal(report.class_counts, np.bincount(labels, minlength=4))
        self.assertTrue(0.0 <= report.top1 <= 1.0)

    def test_uniform_random_logits_near_chance(self):
        rng = np.random.default_rng(1)
        n, k = 4000, 4
        report = report_from_logits(rng.standard_normal((n, k)), rng.integers(0, k, n), k)
        sigma = math.sqrt((1 / k) * (1 - 1 / k) / n)
        self.assertLess(abs(report.top1 - 1 / k), 3 * sigma)

    def test_empty_class_is_nan_not_zero(self):
        report = report_from_logits(np.array([[1.0, 0.0, 0.0]]), [0], 3)
        self.assertEqual(report.per_class[0], 1.0)
        self.assertTrue(np.isnan(report.per_class[1]))
        self.assertIsNone(report.to_dict()["per_class"][2])

    def test_argmax_ties_go_to_lowest_class(self):
        report = report_from_logits(np.zeros((2, 3)), [0, 2], 3)
        npt.assert_array_equal(report.confusion[:, 0], [1, 0, 1])

    def test_mean_loss(self):
        report = report_from_logits(np.zeros((2, 4)), [0, 3], 4)
        self.assertAlmostEqual(report.mean_loss, math.log(4.0), places=12)

    def test_label_out_of_range(self):
        with self.assertRaises(LabelError):
            report_from_logits(np.zeros((1, 3)), [3], 3)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            report_from_logits(np.zeros((2, 3)), [0], 3)


class TestBatching(unittest.TestCase):
    def test_slices_keep_the_partial_batch(self):
        self.assertEqual(batch_slices(5, 2), [slice(0, 2), slice(2, 4), slice(4, 5)])

    def test_make_batch_pads_frames_and_persons(self):
        cfg = tiny_config(max_persons=2)
        seqs = make_synthetic_dataset(3, 1, 5, cfg.num_joints, seed=0)
        batch, labels = make_batch(seqs, cfg)
        self.assertEqual(batch.shape, (3, 3, cfg.num_frames, cfg.num_joints, 2))
        npt.assert_array_equal(batch[..., 1], 0.0)
        npt.assert_array_equal(labels, [0, 1, 2])

    def test_make_batch_checks_joints(self):
        seqs = make_synthetic_dataset(2, 1, 12, 4, seed=0)
        with self.assertRaises(ShapeError):
            make_batch(seqs, tiny_config())


def test_worker_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        worker_threads()
    monkeypatch.delenv(THREADS_ENV)
    assert 1 <= worker_threads() <= 4


def test_logits_independent_of_threads_and_batch_size(tiny_cfg, tiny_dataset):
    with precision("f64"):
        model = SttFormer.create(tiny_cfg, seed=2)
        serial = predict_logits(model, tiny_dataset, batch_size=12, threads=1)
        parallel = predict_logits(model, tiny_dataset, batch_size=5, threads=3)
    assert serial.shape == (len(tiny_dataset), tiny_cfg.num_classes)
    npt.assert_allclose(parallel, serial, rtol=1e-6, atol=1e-9)


def test_evaluate_accepts_a_checkpoint(tiny_cfg, tiny_dataset):
    model = SttFormer.create(tiny_cfg, seed=0)
    direct = evaluate(model, tiny_dataset, threads=1)
    restored = evaluate(model.to_checkpoint(), tiny_dataset, threads=1)
    assert direct.num_samples == len(tiny_dataset)
    assert direct.top1 == restored.top1
    npt.assert_array_equal(direct.confusion, restored.confusion)


class TestFusion(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(3)
        self.logits = self.rng.standard_normal((20, 5))

    def test_single_mode_is_its_own_argmax(self):
        npt.assert_array_equal(fuse_modes([self.logits]), np.argmax(self.logits, axis=1))

    def test_tie_goes_to_class_zero(self):
        sets = [np.array([[2.0, -1.0]]), np.array([[0.0, 3.0]]), np.array([[1.0, 1.0]])]
        npt.assert_array_equal(fused_scores(sets), [[1.0, 1.0]])
        npt.assert_array_equal(fuse_modes(sets), [0])

    def test_duplication_invariance(self):
        other = self.rng.standard_normal((20, 5))
        once = fuse_modes([self.logits, other])
        twice = fuse_modes([self.logits, self.logits, other, other])
        npt.assert_array_equal(once, twice)
        npt.assert_array_equal(fuse_modes([self.logits] * 3), np.argmax(self.logits, axis=1))

    def test_per_sample_shift_invariance(self):
        shift = self.rng.uniform(-50.0, 50.0, (20, 1))
        for average in ("logits", "probs"):
            npt.assert_array_equal(
                fuse_modes([self.logits + shift], average=average),
                fuse_modes([self.logits], average=average),
            )

    def test_weights(self):
        a = np.array([[1.0, 0.0]])
        b = np.array([[0.0, 3.0]])
        npt.assert_array_equal(fuse_modes([a, b], weights=[1.0, 0.0]), [0])
        npt.assert_allclose(fused_scores([a, b], weights=[3.0, 1.0]), [[0.75, 0.75]])

    def test_mismatched_shapes(self):
        with self.assertRaises(FusionError):
            fuse_modes([self.logits, self.logits[:10]])

    def test_mismatched_sample_order(self):
        with self.assertRaises(FusionError):
            fuse_modes([self.logits, self.logits], sample_ids=[["a", "b"], ["b", "a"]])

    def test_bad_weights(self):
        with self.assertRaises(FusionError):
            fuse_modes([self.logits], weights=[-1.0])
        with self.assertRaises(FusionError):
            fuse_modes([self.logits, self.logits], weights=[1.0])

    def test_report_has_one_row_per_mode_plus_fusion(self):
        labels = np.argmax(self.logits, axis=1)
        report = fusion_report({"joint": self.logits, "bone": -self.logits, "motion": self.logits}, labels)
        self.assertEqual([row["mode"] for row in report.rows], ["joint", "bone", "motion", "fusion"])
        self.assertEqual(report.rows[0]["accuracy"], 1.0)
        self.assertEqual(report.fused_accuracy, 1.0)
