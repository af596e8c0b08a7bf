"""Tests for skeleton parsing, the .sttd format, padding and data modes."""

import unittest

import numpy as np
import numpy.testing as npt
import pytest

from sttformer.data.skeleton import (
    SkeletonSequence,
    decode_sttd,
    derive_mode,
    encode_sttd,
    load_dataset_dir,
    parse_ntu_name,
    parse_skeleton_file,
    read_skeleton_file,
    replay_indices,
    replay_pad,
    save_sttd,
    to_bone_mode,
    to_motion_mode,
    write_skeleton_text,
)
from sttformer.data.topology import chain_topology, ntu_topology
from sttformer.errors import ConfigError, SkeletonFormatError, SkeletonParseError


def _skeleton_text(frames):
    """``frames`` is a list of frames, each a list of (body_id, joints[V][3])."""
    lines = [str(len(frames))]
    for bodies in frames:
        lines.append(str(len(bodies)))
        for body_id, joints in bodies:
            lines.append(f"{body_id} 0 1 1 1 1 0 0.1 0.2 2")
            lines.append(str(len(joints)))
            for x, y, z in joints:
                lines.append(f"{x} {y} {z} 0 0 0 0 0 0 0 0 2")
    return "\n".join(lines) + "\n"


def _still(value, joints=2):
    return [(value, value, value)] * joints


def _sequence(frames=4, joints=3, persons=1, seed=0, **fields):
    coords = np.random.default_rng(seed).standard_normal((3, frames, joints, persons))
    return SkeletonSequence(coords=coords, **fields)


class TestParseSkeleton(unittest.TestCase):
    def test_round_trip_through_text(self):
        seq = _sequence(frames=3, joints=25, persons=2, seed=1)
        parsed = parse_skeleton_file(write_skeleton_text(seq))
        npt.assert_array_equal(parsed.coords, seq.coords)

    def test_accepts_bytes_and_blank_lines(self):
        text = _skeleton_text([[("7", _still(1.0))]]).replace("\n", "\n\n")
        parsed = parse_skeleton_file(text.encode("utf-8"), num_joints=2)
        self.assertEqual(parsed.coords.shape, (3, 1, 2, 2))
        npt.assert_array_equal(parsed.coords[:, 0, :, 0], np.ones((3, 2)))
        npt.assert_array_equal(parsed.coords[..., 1], 0.0)

    def test_joint_count_mismatch_reports_line(self):
        text = _skeleton_text([[("1", [(0.0, 0.0, 0.0)] * 24)]])
        with self.assertRaises(SkeletonFormatError) as cm:
            parse_skeleton_file(text)
        self.assertIn("line 4: expected 25 joints, got 24", str(cm.exception))

    def test_non_numeric_coordinate(self):
        text = _skeleton_text([[("1", _still(0.5))]]).replace("0.5 0.5 0.5", "0.5 abc 0.5", 1)
        with self.assertRaises(SkeletonParseError) as cm:
            parse_skeleton_file(text, num_joints=2)
        self.assertEqual(cm.exception.line_number, 5)

    def test_truncated_file(self):
        text = "2\n1\n1 0 0 0 0 0 0 0 0 2\n2\n0 0 0\n"
        with self.assertRaises(SkeletonParseError) as cm:
            parse_skeleton_file(text, num_joints=2)
        self.assertIn("unexpected end of file", str(cm.exception))

    def test_bodies_are_tracked_by_id(self):
        text = _skeleton_text([
            [("a", _still(1.0)), ("b", _still(2.0))],
            [("b", _still(2.5)), ("a", _still(1.5))],
        ])
        parsed = parse_skeleton_file(text, num_joints=2)
        npt.assert_array_equal(parsed.coords[0, :, 0, 0], [1.0, 1.5])
        npt.assert_array_equal(parsed.coords[0, :, 0, 1], [2.0, 2.5])

    def test_keeps_the_most_moving_bodies(self):
        text = _skeleton_text([
            [("still", _still(0.0)), ("fast", _still(0.0)), ("slow", _still(0.0))],
            [("still", _still(0.0)), ("fast", _still(5.0)), ("slow", _still(1.0))],
        ])
        parsed = parse_skeleton_file(text, num_joints=2, max_persons=2)
        npt.assert_array_equal(parsed.coords[0, :, 0, 0], [0.0, 5.0])
        npt.assert_array_equal(parsed.coords[0, :, 0, 1], [0.0, 1.0])

    def test_motion_ties_keep_first_seen_order(self):
        text = _skeleton_text([[("x", _still(1.0)), ("y", _still(2.0)), ("z", _still(3.0))]])
        parsed = parse_skeleton_file(text, num_joints=2, max_persons=2)
        npt.assert_array_equal(parsed.coords[0, 0, 0, :], [1.0, 2.0])

    def test_zero_frames_rejected(self):
        with self.assertRaises(SkeletonFormatError):
            parse_skeleton_file("0\n")


class TestNtuNames(unittest.TestCase):
    def test_parse_name(self):
        meta = parse_ntu_name("S014C002P037R002A050")
        self.assertEqual(meta, {"setup_id": 14, "camera_id": 2, "subject_id": 37, "replication": 2, "label": 49})

    def test_bad_name(self):
        with self.assertRaises(SkeletonFormatError):
            parse_ntu_name("walking_01")


def test_read_skeleton_file_attaches_metadata(tmp_path):
    path = tmp_path / "S001C002P003R001A010.skeleton"
    path.write_text(_skeleton_text([[("1", [(0.1, 0.2, 0.3)] * 25)]]), encoding="utf-8")
    seq = read_skeleton_file(path)
    assert (seq.label, seq.camera_id, seq.subject_id, seq.setup_id) == (9, 2, 3, 1)
    assert seq.name == "S001C002P003R001A010"


def test_read_skeleton_file_without_ntu_name(tmp_path):
    path = tmp_path / "clip.skeleton"
    path.write_text(_skeleton_text([[("1", [(0.1, 0.2, 0.3)] * 25)]]), encoding="utf-8")
    assert read_skeleton_file(path).label == -1


class TestSttd(unittest.TestCase):
    def test_round_trip_is_bit_exact(self):
        seq = _sequence(label=3, subject_id=5, camera_id=2, setup_id=7, name="clip")
        restored = decode_sttd(encode_sttd(seq))
        npt.assert_array_equal(restored.coords, seq.coords)
        self.assertEqual(
            (restored.label, restored.subject_id, restored.camera_id, restored.setup_id, restored.name),
            (3, 5, 2, 7, "clip"),
        )

    def test_truncated_payload(self):
        with self.assertRaises(SkeletonFormatError):
            decode_sttd(encode_sttd(_sequence())[:-8])

    def test_garbage(self):
        with self.assertRaises(SkeletonFormatError):
            decode_sttd(b"\x01")

    def test_invalid_coords_shape(self):
        with self.assertRaises(SkeletonFormatError):
            SkeletonSequence(coords=np.zeros((2, 4, 3, 1)))


def test_load_dataset_dir_sorted(tmp_path):
    for name in ("b", "a", "c"):
        save_sttd(_sequence(name=name), tmp_path / f"{name}.sttd")
    (tmp_path / "notes.txt").write_text("ignored", encoding="utf-8")
    assert [seq.name for seq in load_dataset_dir(tmp_path)] == ["a", "b", "c"]
    with pytest.raises(ConfigError):
        load_dataset_dir(tmp_path / "missing")


class TestReplayPad(unittest.TestCase):
    def test_short_sequences_cycle_from_the_start(self):
        npt.assert_array_equal(replay_indices(3, 7), [0, 1, 2, 0, 1, 2, 0])

    def test_long_sequences_subsample_uniformly(self):
        npt.assert_array_equal(replay_indices(10, 5), [0, 2, 4, 6, 8])

    def test_exact_length_is_identity(self):
        seq = _sequence(frames=6)
        npt.assert_array_equal(replay_pad(seq, 6).coords, seq.coords)

    def test_padded_values_repeat(self):
        seq = _sequence(frames=2)
        padded = replay_pad(seq, 5)
        self.assertEqual(padded.num_frames, 5)
        npt.assert_array_equal(padded.coords[:, 4], seq.coords[:, 0])

    def test_rejects_non_positive_target(self):
        with self.assertRaises(ConfigError):
            replay_indices(3, 0)


class TestModes(unittest.TestCase):
    def setUp(self):
        self.seq = _sequence(frames=4, joints=3, persons=2, seed=4)
        self.topology = chain_topology(3)

    def test_bone_mode_subtracts_parent(self):
        bones = to_bone_mode(self.seq, self.topology).coords
        npt.assert_array_equal(bones[:, :, 0], 0.0)
        npt.assert_array_equal(bones[:, :, 2], self.seq.coords[:, :, 2] - self.seq.coords[:, :, 1])

    def test_bone_mode_needs_matching_topology(self):
        with self.assertRaises(SkeletonFormatError):
            to_bone_mode(self.seq, chain_topology(4))

    def test_motion_mode_last_frame_zero(self):
        motion = to_motion_mode(self.seq).coords
        npt.assert_array_equal(motion[:, -1], 0.0)
        npt.assert_array_equal(motion[:, 0], self.seq.coords[:, 1] - self.seq.coords[:, 0])

    def test_bones_telescope_along_every_chain(self):
        seq = _sequence(frames=3, joints=25, persons=2, seed=6)
        topology = ntu_topology()
        bones = to_bone_mode(seq, topology).coords
        for leaf in (3, 15, 19, 23, 24):
            chain = topology.chain_to_root(leaf)
            total = bones[:, :, chain].sum(axis=2)
            npt.assert_allclose(total, seq.coords[:, :, leaf] - seq.coords[:, :, chain[-1]], atol=1e-12)

    def test_motion_cumulative_sum_restores_joints(self):
        motion = to_motion_mode(self.seq).coords
        steps = np.cumsum(motion[:, :-1], axis=1)
        rebuilt = np.concatenate([self.seq.coords[:, :1], self.seq.coords[:, :1] + steps], axis=1)
        npt.assert_allclose(rebuilt, self.seq.coords, atol=1e-12)

    def test_modes_commute_with_person_slicing(self):
        for mode in ("bone", "motion", "bone_motion"):
            whole = derive_mode(self.seq, mode, self.topology).coords
            for person in range(self.seq.num_persons):
                alone = self.seq.with_coords(self.seq.coords[..., person:person + 1])
                npt.assert_array_equal(derive_mode(alone, mode, self.topology).coords[..., 0], whole[..., person],
                                       err_msg=f"{mode} person {person}")

    def test_bone_motion_is_motion_of_bones(self):
        expected = to_motion_mode(to_bone_mode(self.seq, self.topology)).coords
        npt.assert_array_equal(derive_mode(self.seq, "bone_motion", self.topology).coords, expected)

    def test_joint_mode_is_identity(self):
        self.assertIs(derive_mode(self.seq, "joint"), self.seq)

    def test_bone_mode_needs_a_topology(self):
        with self.assertRaises(ConfigError):
            derive_mode(self.seq, "bone")

    def test_unknown_mode(self):
        with self.assertRaises(ConfigError) as cm:
            derive_mode(self.seq, "velocity", self.topology)
        self.assertIn("Valid modes", str(cm.exception))

    def test_modes_keep_metadata(self):
        seq = _sequence(label=2, subject_id=9)
        motion = to_motion_mode(seq)
        self.assertEqual((motion.label, motion.subject_id), (2, 9))
