"""Tests for the binary checkpoint format and model save/restore."""

import struct
import unittest

import numpy as np
import numpy.testing as npt
import pytest

from sttformer.core.checkpoint import (
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from sttformer.core.tensor import precision
from sttformer.errors import CheckpointError
from sttformer.model.config import tiny_config
from sttformer.model.network import SttFormer


def _sample():
    return Checkpoint(
        config={"n": 3, "channels": [8, 8]},
        arrays={
            "b.weight": np.arange(6, dtype=np.float32).reshape(2, 3),
            "a.bias": np.array([1.5, -2.0]),
            "steps": np.array(7, dtype=np.int64),
        },
        metadata={"mode": "bone", "epoch": 4},
    )


class TestCheckpointFormat(unittest.TestCase):
    def test_round_trip_keeps_arrays_config_and_metadata(self):
        original = _sample()
        restored = decode_checkpoint(encode_checkpoint(original))
        self.assertEqual(restored.config, original.config)
        self.assertEqual(restored.metadata, original.metadata)
        self.assertEqual(sorted(restored.arrays), sorted(original.arrays))
        for name, array in original.arrays.items():
            self.assertEqual(restored.arrays[name].dtype, array.dtype)
            npt.assert_array_equal(restored.arrays[name], array)

    def test_starts_with_magic_and_version(self):
        blob = encode_checkpoint(_sample())
        self.assertEqual(blob[:4], MAGIC)
        self.assertEqual(struct.unpack("<I", blob[4:8])[0], 1)

    def test_encoding_is_deterministic(self):
        self.assertEqual(encode_checkpoint(_sample()), encode_checkpoint(_sample()))

    def test_bad_magic(self):
        blob = b"NOPE" + encode_checkpoint(_sample())[4:]
        with self.assertRaises(CheckpointError) as cm:
            decode_checkpoint(blob)
        self.assertIn("magic", str(cm.exception))

    def test_truncated_blob(self):
        blob = encode_checkpoint(_sample())
        with self.assertRaises(CheckpointError):
            decode_checkpoint(blob[:-5])

    def test_config_mismatch_is_rejected(self):
        blob = encode_checkpoint(_sample())
        with self.assertRaises(CheckpointError):
            decode_checkpoint(blob, expected_config={"n": 6, "channels": [8, 8]})
        decode_checkpoint(blob, expected_config={"channels": [8, 8], "n": 3})

    def test_unsupported_dtype(self):
        bad = Checkpoint(config={}, arrays={"x": np.zeros(2, dtype=np.int32)})
        with self.assertRaises(CheckpointError):
            encode_checkpoint(bad)

    def test_missing_file(self):
        with self.assertRaises(CheckpointError):
            load_checkpoint("/nonexistent/model.sttf")


def test_model_round_trip_through_disk(tmp_path):
    with precision("f64"):
        cfg = tiny_config()
        model = SttFormer.create(cfg, seed=3)
        batch = np.random.default_rng(0).standard_normal((2, 3, cfg.num_frames, cfg.num_joints, 1))
        expected = model.logits(batch)
        path = save_checkpoint(model.to_checkpoint(metadata={"mode": "joint"}), tmp_path / "m.sttf")

    # restoring does not depend on the process-wide precision
    restored = SttFormer.from_checkpoint(load_checkpoint(path, expected_config=cfg.to_dict()))
    assert restored.params.classifier.weight.dtype == np.float64
    assert restored.config == cfg
    npt.assert_array_equal(restored.logits(batch), expected)


def test_load_state_rejects_missing_and_misshapen_arrays():
    model = SttFormer.create(tiny_config(), seed=0)
    arrays = model.params.state_arrays()
    arrays.pop("classifier.bias")
    with pytest.raises(CheckpointError):
        model.params.load_state_arrays(arrays)
    arrays = model.params.state_arrays()
    arrays["classifier.bias"] = np.zeros(7, dtype=np.float32)
    with pytest.raises(CheckpointError):
        model.params.load_state_arrays(arrays)


def test_checkpoint_with_invalid_config():
    checkpoint = SttFormer.create(tiny_config(), seed=0).to_checkpoint()
    checkpoint.config["n"] = 5
    with pytest.raises(CheckpointError):
        SttFormer.from_checkpoint(checkpoint)
