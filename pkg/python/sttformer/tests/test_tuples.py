"""Tests for the tuple partition and its inverse."""

import unittest

import numpy as np
import numpy.testing as npt

from sttformer.data.tuples import TupleTensor, check_tuple_length, divisors, partition_tuples, unpartition_tuples
from sttformer.errors import ConfigError, ShapeError


class TestPartition(unittest.TestCase):
    def test_randomized_round_trips_are_bit_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            frames = n * int(rng.integers(1, 6))
            shape = tuple(int(s) for s in rng.integers(1, 4, size=int(rng.integers(0, 3)))) + (
                int(rng.integers(1, 4)), frames, int(rng.integers(1, 6)))
            x = rng.standard_normal(shape)
            tuples = partition_tuples(x, n)
            self.assertEqual(tuples.num_tuples, frames // n)
            self.assertEqual(tuples.tuple_joints, n * shape[-1])
            self.assertTrue(np.array_equal(unpartition_tuples(tuples), x))

    def test_frame_major_flattening(self):
        x = np.random.default_rng(1).standard_normal((2, 12, 5))
        out = partition_tuples(x, 3).data
        for c in range(2):
            for t in range(4):
                for f in range(3):
                    for v in range(5):
                        self.assertEqual(out[c, t, f * 5 + v], x[c, t * 3 + f, v])

    def test_n_equal_one_is_identity(self):
        x = np.arange(60.0).reshape(3, 4, 5)
        tuples = partition_tuples(x, 1)
        npt.assert_array_equal(tuples.data, x)
        self.assertEqual(tuples.base_joints, 5)

    def test_non_divisor_lists_valid_choices(self):
        with self.assertRaises(ConfigError) as cm:
            partition_tuples(np.zeros((3, 12, 5)), 5)
        self.assertIn("valid choices: [1, 2, 3, 4, 6, 12]", str(cm.exception))

    def test_check_tuple_length_rejects_zero(self):
        with self.assertRaises(ConfigError):
            check_tuple_length(12, 0)

    def test_divisors(self):
        self.assertEqual(divisors(120)[:8], [1, 2, 3, 4, 5, 6, 8, 10])

    def test_unpartition_checks_joint_axis(self):
        with self.assertRaises(ShapeError):
            unpartition_tuples(TupleTensor(data=np.zeros((2, 2, 7)), n=3))

    def test_rank_too_small(self):
        with self.assertRaises(ShapeError):
            partition_tuples(np.zeros(6), 2)
