"""Skeleton data: parsing, interchange format, modes, tuples, synthetic sets."""

from .skeleton import (
    MODES,
    SkeletonSequence,
    decode_sttd,
    derive_mode,
    encode_sttd,
    load_dataset_dir,
    load_sttd,
    parse_ntu_name,
    parse_skeleton_file,
    read_skeleton_file,
    replay_pad,
    save_sttd,
    to_bone_mode,
    to_motion_mode,
    write_skeleton_text,
)
from .splits import split_dataset
from .synthetic import class_lag_signs, make_synthetic_dataset
from .topology import SkeletonTopology, chain_topology, load_topology, ntu_topology
from .tuples import TupleTensor, partition_tuples, unpartition_tuples

__all__ = [
    "MODES",
    "SkeletonSequence",
    "SkeletonTopology",
    "TupleTensor",
    "parse_skeleton_file",
    "read_skeleton_file",
    "write_skeleton_text",
    "parse_ntu_name",
    "encode_sttd",
    "decode_sttd",
    "save_sttd",
    "load_sttd",
    "load_dataset_dir",
    "replay_pad",
    "to_bone_mode",
    "to_motion_mode",
    "derive_mode",
    "partition_tuples",
    "unpartition_tuples",
    "make_synthetic_dataset",
    "class_lag_signs",
    "split_dataset",
    "ntu_topology",
    "chain_topology",
    "load_topology",
]
