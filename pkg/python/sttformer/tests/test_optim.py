"""Tests for the Nesterov SGD step and the step learning-rate schedule."""

import unittest

import numpy as np
import numpy.testing as npt

from sttformer.core.tensor import AdTensor
from sttformer.errors import ConfigError, NonFiniteGradientError
from sttformer.training.optim import OptimizerState, TrainSchedule, decays_weight, lr_at, sgd_nesterov_step


def _param(value, name="layer.weight"):
    return {name: AdTensor(np.array([value]), requires_grad=True, dtype=np.float64)}


class TestNesterovStep(unittest.TestCase):
    def test_vanilla_sgd_without_momentum(self):
        params = _param(1.0)
        sgd_nesterov_step(params, {"layer.weight": np.array([2.0])}, OptimizerState(lr=0.1, momentum=0.0, weight_decay=0.0))
        self.assertAlmostEqual(params["layer.weight"].data[0], 0.8, delta=1e-12)

    def test_lookahead_momentum_scalar_example(self):
        params = _param(1.0)
        state = OptimizerState(lr=0.1, momentum=0.9, weight_decay=0.0)
        sgd_nesterov_step(params, {"layer.weight": np.array([1.0])}, state)
        self.assertAlmostEqual(params["layer.weight"].data[0], 0.81, delta=1e-12)
        self.assertAlmostEqual(state.velocity["layer.weight"][0], 1.0, delta=1e-12)

    def test_second_step_uses_velocity(self):
        params = _param(1.0)
        state = OptimizerState(lr=0.1, momentum=0.9, weight_decay=0.0)
        for _ in range(2):
            sgd_nesterov_step(params, {"layer.weight": np.array([1.0])}, state)
        # v = 0.9 * 1 + 1 = 1.9; step = 0.1 * (1 + 0.9 * 1.9) = 0.271
        self.assertAlmostEqual(params["layer.weight"].data[0], 0.81 - 0.271, delta=1e-12)

    def test_zero_gradient_leaves_parameters_unchanged(self):
        params = _param(0.37)
        sgd_nesterov_step(params, {"layer.weight": np.array([0.0])}, OptimizerState(lr=0.1, weight_decay=0.0))
        self.assertEqual(params["layer.weight"].data[0], 0.37)

    def test_weight_decay_only_on_weights(self):
        params = {**_param(1.0, "conv.weight"), **_param(1.0, "norm.gamma"), **_param(1.0, "layers.0.spatial_bias")}
        grads = {name: np.array([0.0]) for name in params}
        sgd_nesterov_step(params, grads, OptimizerState(lr=0.1, momentum=0.0, weight_decay=0.5))
        self.assertAlmostEqual(params["conv.weight"].data[0], 0.95, delta=1e-12)
        self.assertEqual(params["norm.gamma"].data[0], 1.0)
        self.assertEqual(params["layers.0.spatial_bias"].data[0], 1.0)
        self.assertTrue(decays_weight("classifier.weight"))
        self.assertFalse(decays_weight("classifier.bias"))

    def test_missing_gradient_is_skipped(self):
        params = _param(1.0)
        sgd_nesterov_step(params, {"layer.weight": None}, OptimizerState(lr=0.1))
        self.assertEqual(params["layer.weight"].data[0], 1.0)

    def test_nan_gradient_names_the_parameter(self):
        with self.assertRaises(NonFiniteGradientError) as cm:
            sgd_nesterov_step(_param(1.0), {"layer.weight": np.array([np.nan])}, OptimizerState(lr=0.1))
        self.assertEqual(cm.exception.parameter, "layer.weight")

    def test_state_arrays_round_trip(self):
        state = OptimizerState(lr=0.1)
        sgd_nesterov_step(_param(1.0), {"layer.weight": np.array([1.0])}, state)
        restored = OptimizerState(lr=0.1)
        restored.load_state_arrays({**state.state_arrays(), "classifier.weight": np.zeros(2)})
        self.assertEqual(list(restored.velocity), ["layer.weight"])
        npt.assert_array_equal(restored.velocity["layer.weight"], state.velocity["layer.weight"])

    def test_invalid_state(self):
        with self.assertRaises(ConfigError):
            OptimizerState(lr=-1.0)
        with self.assertRaises(ConfigError):
            OptimizerState(lr=0.1, momentum=1.0)


class TestSchedule(unittest.TestCase):
    def test_default_recipe(self):
        schedule = TrainSchedule()
        self.assertEqual(lr_at(0, schedule), 0.1)
        self.assertEqual(lr_at(59, schedule), 0.1)
        self.assertAlmostEqual(lr_at(60, schedule), 0.01, delta=1e-15)
        self.assertAlmostEqual(lr_at(79, schedule), 0.01, delta=1e-15)
        self.assertAlmostEqual(lr_at(80, schedule), 0.001, delta=1e-15)
        self.assertAlmostEqual(lr_at(89, schedule), 0.001, delta=1e-15)

    def test_plateau_count(self):
        schedule = TrainSchedule(epochs=10, base_lr=1.0, milestones=(2, 5, 7), decay=0.5)
        values = [lr_at(e, schedule) for e in range(schedule.epochs)]
        self.assertEqual(len(set(values)), 4)
        self.assertAlmostEqual(values[-1] / values[0], 0.5 ** 3)

    def test_milestones_must_increase_and_precede_the_end(self):
        with self.assertRaises(ConfigError):
            TrainSchedule(epochs=10, milestones=(5, 5))
        with self.assertRaises(ConfigError):
            TrainSchedule(epochs=10, milestones=(4, 10))

    def test_single_milestone_from_config_file(self):
        self.assertEqual(TrainSchedule(epochs=10, milestones=4).milestones, (4,))

    def test_no_milestones(self):
        schedule = TrainSchedule(epochs=3, milestones=())
        self.assertEqual([lr_at(e, schedule) for e in range(3)], [0.1, 0.1, 0.1])
