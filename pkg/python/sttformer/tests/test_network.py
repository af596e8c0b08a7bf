"""Tests for network assembly, the parameter registry and eval-mode behaviour."""

import unittest

import numpy as np
import numpy.testing as npt
import pytest

from sttformer.core.ops import softmax_cross_entropy
from sttformer.core.tensor import AdTensor, Tape, precision
from sttformer.errors import ConfigError, LayerError, ShapeError
from sttformer.model.config import ModelConfig, tiny_config
from sttformer.model.network import SttFormer, active_persons, forward
from sttformer.model.params import count_params, init_params


class TestModelConfig(unittest.TestCase):
    def test_defaults_are_the_full_recipe(self):
        cfg = ModelConfig()
        self.assertEqual((cfg.n, cfg.num_layers, cfg.num_frames, cfg.num_joints), (6, 8, 120, 25))
        self.assertEqual(cfg.channels, (64, 64, 128, 128, 256, 256, 256, 256))
        self.assertEqual((cfg.num_tuples, cfg.tuple_joints), (20, 150))

    def test_n_must_divide_the_frame_count(self):
        with self.assertRaises(ConfigError) as cm:
            ModelConfig(n=7)
        self.assertIn("valid choices", str(cm.exception))

    def test_channels_must_divide_by_heads(self):
        with self.assertRaises(ConfigError):
            ModelConfig(heads=3)

    def test_channel_count_must_match_layers(self):
        with self.assertRaises(ConfigError):
            ModelConfig(num_layers=2, channels=(64, 64, 128))

    def test_even_kernels_rejected(self):
        with self.assertRaises(ConfigError):
            ModelConfig(k2=2)

    def test_replace_tracks_layer_count(self):
        cfg = ModelConfig().replace(channels=[16, 32])
        self.assertEqual(cfg.num_layers, 2)

    def test_dict_round_trip_and_digest(self):
        cfg = tiny_config(k2=5)
        self.assertEqual(ModelConfig.from_dict(cfg.to_dict()), cfg)
        self.assertEqual(cfg.digest(), tiny_config(k2=5).digest())
        self.assertNotEqual(cfg.digest(), tiny_config().digest())

    def test_unknown_keys_listed(self):
        with self.assertRaises(ConfigError) as cm:
            ModelConfig.from_dict({"layers": 3})
        self.assertIn("Valid keys", str(cm.exception))


@pytest.mark.parametrize("changes", [
    {},
    {"pe_enabled": False},
    {"iffa_enabled": False},
    {"sgr_enabled": False},
    {"k1": 3, "k2": 5},
    {"channels": [8, 16]},
])
def test_count_params_matches_registry(changes):
    cfg = tiny_config(**changes)
    assert count_params(cfg) == init_params(cfg).num_parameters()


def test_count_params_default_recipe():
    cfg = ModelConfig()
    assert count_params(cfg) == init_params(cfg).num_parameters()


def test_parameter_names_are_ordered_and_unique():
    names = list(init_params(tiny_config(channels=[8, 16])).named_parameters())
    assert names[0] == "feature_map.weight"
    assert names[-1] == "classifier.bias"
    assert len(names) == len(set(names))
    assert "layers.1.residual.weight" in names
    assert "layers.0.residual.weight" not in names


def test_spatial_bias_starts_at_zero():
    for layer in init_params(tiny_config(), seed=5).layers:
        npt.assert_array_equal(layer.spatial_bias.data, 0.0)


def test_initialization_is_deterministic_per_seed():
    a = init_params(tiny_config(), seed=1).state_arrays()
    b = init_params(tiny_config(), seed=1).state_arrays()
    c = init_params(tiny_config(), seed=2).state_arrays()
    for name in a:
        npt.assert_array_equal(a[name], b[name])
    assert not np.array_equal(a["classifier.weight"], c["classifier.weight"])


class TestForward(unittest.TestCase):
    def setUp(self):
        self._precision = precision("f64")
        self._precision.__enter__()
        self.cfg = tiny_config(max_persons=2)
        self.model = SttFormer.create(self.cfg, seed=0)
        rng = np.random.default_rng(1)
        self.batch = rng.standard_normal((5, 3, self.cfg.num_frames, self.cfg.num_joints, 2))
        self.batch[:, :, :, :, 1] = 0.0
        self.batch[3, :, :, :, 1] = rng.standard_normal((3, self.cfg.num_frames, self.cfg.num_joints))

    def tearDown(self):
        self._precision.__exit__(None, None, None)

    def test_logit_shape(self):
        self.assertEqual(self.model.logits(self.batch).shape, (5, self.cfg.num_classes))

    def test_eval_logits_do_not_depend_on_batch_size(self):
        together = self.model.logits(self.batch)
        for i in range(5):
            alone = self.model.logits(self.batch[i:i + 1])
            npt.assert_allclose(alone[0], together[i], rtol=1e-6, atol=1e-9)

    def test_person_logits_are_summed(self):
        sample = self.batch[3:4]
        first = sample.copy()
        first[..., 1] = 0.0
        second = sample.copy()
        second[..., 0] = sample[..., 1]
        second[..., 1] = 0.0
        npt.assert_allclose(
            self.model.logits(sample),
            self.model.logits(first) + self.model.logits(second),
            rtol=1e-10,
        )

    def test_active_persons_keeps_at_least_one(self):
        batch = np.zeros((2, 3, 4, 5, 2))
        batch[1, ..., 1] = 1.0
        self.assertEqual(active_persons(batch), [(0, 0), (1, 1)])

    def test_wrong_input_shape(self):
        with self.assertRaises(ShapeError):
            self.model.logits(np.zeros((1, 3, self.cfg.num_frames + 1, self.cfg.num_joints, 2)))

    def test_layer_failures_carry_the_layer_index(self):
        self.model.params.layers[1].spatial_bias = AdTensor(np.zeros((2, 3, 3)))
        with self.assertRaises(LayerError) as cm:
            self.model.logits(self.batch)
        self.assertEqual(cm.exception.layer, 1)
        self.assertIsInstance(cm.exception.cause, ShapeError)

    def test_train_step_reaches_every_parameter(self):
        named = self.model.params.named_parameters()
        with Tape() as tape:
            logits = forward(self.batch, self.model.params, self.cfg, training=True)
            tape.backward(softmax_cross_entropy(logits, [0, 1, 2, 0, 1]))
        tape.clear()
        missing = [name for name, t in named.items() if t.grad is None]
        self.assertEqual(missing, [])

    def test_train_mode_updates_running_stats_eval_does_not(self):
        before = self.model.params.named_buffers()
        snapshot = {name: b.copy() for name, b in before.items()}
        self.model.logits(self.batch)
        for name, array in before.items():
            npt.assert_array_equal(array, snapshot[name])
        forward(self.batch, self.model.params, self.cfg, training=True)
        changed = [name for name, array in before.items() if not np.array_equal(array, snapshot[name])]
        self.assertIn("feature_norm.running_mean", changed)
