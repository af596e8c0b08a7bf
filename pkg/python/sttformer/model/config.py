"""
Architecture hyperparameters.

``ModelConfig`` holds every shape-relevant knob of the network. The defaults
are the full-scale recipe (T0=120 frames of V0=25 joints, tuples of n=6
frames, eight layers widening 64 -> 256). ``tiny_config`` is the small
network used by gradient checks and tests.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Tuple, Type, TypeVar

from ..data.tuples import check_tuple_length
from ..errors import ConfigError

T = TypeVar("T")

DEFAULT_CHANNELS = (64, 64, 128, 128, 256, 256, 256, 256)
IN_CHANNELS = 3


def merge_known(cls: Type[T], overrides: Mapping[str, Any], what: str) -> T:
    """Build dataclass ``cls`` from its defaults merged with ``overrides``.

    Unknown keys are rejected with the list of valid ones.
    """
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(overrides) - valid)
    if unknown:
        raise ConfigError(
            f"unknown {what} key(s) {', '.join(repr(k) for k in unknown)}. "
            f"Valid keys: {', '.join(sorted(valid))}"
        )
    return cls(**dict(overrides))


def _positive(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


@dataclass
class ModelConfig:
    """Architecture of one network.

    ``num_frames`` is T0 (after replay padding), ``num_joints`` is V0, ``n``
    the frames per tuple, ``channels`` the output width of each of the
    ``num_layers`` stacked layers and ``c1`` the feature-mapping width.
    """
    n: int = 6
    num_layers: int = 8
    channels: Tuple[int, ...] = field(default=DEFAULT_CHANNELS)
    heads: int = 4
    qk_dim_per_head: int = 16
    k1: int = 1
    k2: int = 3
    c1: int = 64
    pe_enabled: bool = True
    sgr_enabled: bool = True
    iffa_enabled: bool = True
    leaky_slope: float = 0.1
    num_classes: int = 60
    num_joints: int = 25
    num_frames: int = 120
    max_persons: int = 2

    def __post_init__(self):
        if isinstance(self.channels, int):
            self.channels = (self.channels,)
        self.channels = tuple(int(c) for c in self.channels)
        for name in ("n", "heads", "qk_dim_per_head", "k1", "k2", "c1",
                     "num_classes", "num_joints", "num_frames", "max_persons"):
            _positive(name, getattr(self, name))
        if self.num_layers < 0:
            raise ConfigError(f"num_layers must be >= 0, got {self.num_layers}")
        if len(self.channels) != self.num_layers:
            raise ConfigError(
                f"channels lists {len(self.channels)} widths but num_layers={self.num_layers}"
            )
        for i, width in enumerate(self.channels):
            _positive(f"channels[{i}]", width)
            if width % self.heads:
                raise ConfigError(
                    f"channels[{i}]={width} is not divisible by heads={self.heads}"
                )
        for name in ("k1", "k2"):
            if getattr(self, name) % 2 == 0:
                raise ConfigError(f"{name} must be odd for same padding, got {getattr(self, name)}")
        if self.pe_enabled and self.c1 % 2:
            raise ConfigError(f"positional encoding needs an even width, c1={self.c1}")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise ConfigError(f"leaky_slope must be in [0, 1), got {self.leaky_slope}")
        check_tuple_length(self.num_frames, self.n)

    # -- derived shapes -------------------------------------------------

    @property
    def num_tuples(self) -> int:
        return self.num_frames // self.n

    @property
    def tuple_joints(self) -> int:
        return self.n * self.num_joints

    @property
    def final_channels(self) -> int:
        return self.channels[-1] if self.channels else self.c1

    def layer_widths(self) -> Tuple[Tuple[int, int], ...]:
        """(C_in, C_out) of every stacked layer."""
        widths = []
        cin = self.c1
        for cout in self.channels:
            widths.append((cin, cout))
            cin = cout
        return tuple(widths)

    # -- serialization --------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["channels"] = list(self.channels)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        return merge_known(cls, data, "model config")

    def replace(self, **changes) -> "ModelConfig":
        data = self.to_dict()
        data.update(changes)
        if "channels" in changes and "num_layers" not in changes:
            data["num_layers"] = len(data["channels"])
        return ModelConfig.from_dict(data)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def tiny_config(**changes) -> ModelConfig:
    """T0=12, V0=5, n=3, two layers of width 8, two heads."""
    base = ModelConfig(
        n=3,
        num_layers=2,
        channels=(8, 8),
        heads=2,
        qk_dim_per_head=4,
        c1=8,
        num_classes=3,
        num_joints=5,
        num_frames=12,
        max_persons=1,
    )
    return base.replace(**changes) if changes else base
