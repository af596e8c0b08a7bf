"""
Spatio-temporal tuple partition.

A sequence of ``T0`` frames is cut into ``T = T0 / n`` non-overlapping tuples
of ``n`` consecutive frames, and the joints of each tuple are flattened
frame-major into one axis of ``V = n * V0`` tuple-joints::

    out[c, t, f * V0 + v] = x[c, t * n + f, v]

so every joint keeps a distinct within-tuple ID. The partition is a pure
reshape: it never copies values through arithmetic and inverts bit-exactly.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import ConfigError, ShapeError


def divisors(value: int) -> List[int]:
    return [d for d in range(1, value + 1) if value % d == 0]


def check_tuple_length(num_frames: int, n: int) -> None:
    """Raise ConfigError unless ``n`` divides ``num_frames`` (no silent truncation)."""
    if n < 1:
        raise ConfigError(f"tuple length n must be >= 1, got {n}")
    if num_frames % n:
        raise ConfigError(
            f"tuple length n={n} does not divide T0={num_frames}; "
            f"valid choices: {divisors(num_frames)}"
        )


@dataclass
class TupleTensor:
    """Feature array [..., C, T, V] after partition, with its tuple length."""
    data: np.ndarray
    n: int

    @property
    def num_tuples(self) -> int:
        return self.data.shape[-2]

    @property
    def tuple_joints(self) -> int:
        return self.data.shape[-1]

    @property
    def base_joints(self) -> int:
        return self.data.shape[-1] // self.n


def partition_tuples(x: np.ndarray, n: int) -> TupleTensor:
    """[..., C, T0, V0] -> TupleTensor [..., C, T0/n, n*V0]."""
    x = np.asarray(x)
    if x.ndim < 2:
        raise ShapeError(f"partition_tuples: need at least [T0, V0] axes, got shape {x.shape}")
    frames, joints = x.shape[-2], x.shape[-1]
    check_tuple_length(frames, n)
    shape = x.shape[:-2] + (frames // n, n * joints)
    return TupleTensor(data=x.reshape(shape), n=n)


def unpartition_tuples(tuples: TupleTensor) -> np.ndarray:
    """Inverse of :func:`partition_tuples`."""
    data = tuples.data
    if data.shape[-1] % tuples.n:
        raise ShapeError(
            f"unpartition_tuples: tuple-joint axis V={data.shape[-1]} is not a multiple of n={tuples.n}"
        )
    shape = data.shape[:-2] + (data.shape[-2] * tuples.n, data.shape[-1] // tuples.n)
    return data.reshape(shape)
