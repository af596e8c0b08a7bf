"""
Desk-scale synthetic skeleton datasets.

Every sample draws two random smooth trajectories (a sum of sinusoids with
random frequencies and phases, the same distribution for every class) for
the x and y axes. Joints are split round-robin into a reference group and
one group per label bit. The reference group follows the trajectories
directly; group ``g`` follows them shifted by ``lag`` frames, ahead when bit
``g - 1`` of the label is set and behind otherwise.

So every joint has the same marginal trajectory in every class, and a single
frame only tells whether two groups lean the same way or opposite ways (a
shifted pair looks the same forwards and backwards in time). Telling a lead
from a lag needs a joint at one frame next to another joint ``lag`` frames
away, which is what tuples and inter-frame aggregation see.
"""

import math
from typing import List

import numpy as np

from ..errors import ConfigError
from .skeleton import NUM_CHANNELS, SkeletonSequence

AMPLITUDE = 0.3
BONE_LENGTH = 0.1
COMPONENTS = 3
MIN_CYCLES = 1.0
MAX_CYCLES = 3.0


def label_bits(num_classes: int) -> int:
    return max(1, math.ceil(math.log2(num_classes)))


def class_lag_signs(num_classes: int) -> np.ndarray:
    """[K, bits] of +1 (group leads the reference) / -1 (group lags)."""
    bits = label_bits(num_classes)
    labels = np.arange(num_classes)[:, None]
    return np.where((labels >> np.arange(bits)[None, :]) & 1, 1, -1)


def joint_groups(num_joints: int, num_classes: int) -> np.ndarray:
    """Group of every joint; group 0 is the reference."""
    groups = label_bits(num_classes) + 1
    if num_joints < groups:
        raise ConfigError(
            f"synthetic data with {num_classes} classes needs at least {groups} joints, got {num_joints}"
        )
    return np.arange(num_joints) % groups


def lag_frames(num_frames: int) -> int:
    return max(1, num_frames // 8)


def _trajectory(rng: np.random.Generator, times: np.ndarray, num_frames: int) -> np.ndarray:
    cycles = rng.uniform(MIN_CYCLES, MAX_CYCLES, COMPONENTS)
    phases = rng.uniform(0.0, 2.0 * math.pi, COMPONENTS)
    angle = 2.0 * math.pi * cycles[:, None] * times[None, :] / num_frames + phases[:, None]
    return np.sin(angle).sum(axis=0) / math.sqrt(COMPONENTS / 2.0)


def make_synthetic_dataset(
    num_classes: int,
    samples_per_class: int,
    num_frames: int,
    num_joints: int,
    seed: int,
    noise: float = 0.02,
    num_persons: int = 1,
) -> List[SkeletonSequence]:
    """Balanced, seed-deterministic list of sequences (class-interleaved order).

    Subject, camera and setup ids cycle over small ranges so every split
    protocol has both halves populated.
    """
    if num_classes < 1 or samples_per_class < 1:
        raise ConfigError("synthetic data needs num_classes >= 1 and samples_per_class >= 1")
    if num_frames < 1 or num_joints < 1:
        raise ConfigError("synthetic data needs at least one frame and one joint")
    if num_persons < 1:
        raise ConfigError("synthetic data needs at least one person slot")

    rng = np.random.default_rng(seed)
    groups = joint_groups(num_joints, num_classes)
    signs = class_lag_signs(num_classes)
    lag = lag_frames(num_frames)
    # trajectories cover [-lag, T + lag) so every shifted joint reads real samples
    times = np.arange(-lag, num_frames + lag, dtype=np.float64)
    frames = np.arange(num_frames)
    rest = np.zeros((NUM_CHANNELS, 1, num_joints))
    rest[1, 0, :] = BONE_LENGTH * np.arange(num_joints)
    rest[2, 0, :] = 3.0

    sequences: List[SkeletonSequence] = []
    index = 0
    for _ in range(samples_per_class):
        for label in range(num_classes):
            shifts = np.concatenate([[0], signs[label] * lag])[groups]
            rows = frames[:, None] + lag + shifts[None, :]
            coords = np.zeros((NUM_CHANNELS, num_frames, num_joints, num_persons))
            coords[0, :, :, 0] = AMPLITUDE * _trajectory(rng, times, num_frames)[rows]
            coords[1, :, :, 0] = 0.5 * AMPLITUDE * _trajectory(rng, times, num_frames)[rows]
            coords[:, :, :, 0] += rest
            coords[:, :, :, 0] += noise * rng.standard_normal((NUM_CHANNELS, num_frames, num_joints))
            sequences.append(
                SkeletonSequence(
                    coords=coords,
                    label=label,
                    subject_id=index % 8 + 1,
                    camera_id=index % 3 + 1,
                    setup_id=index % 4 + 1,
                    name=f"synthetic-{seed}-{index:05d}",
                )
            )
            index += 1
    return sequences
