"""
Skeleton topology: the parent of every joint.

Root joints map to themselves. The default 25-joint NTU layout ships as
``ntu25.json`` (a JSON array ``parent[25]``, 0-based, spine base = joint 20
as root).
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from ..errors import ConfigError


@dataclass(frozen=True)
class SkeletonTopology:
    """Parent list of a skeleton forest."""
    parent: Tuple[int, ...]

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        object.__setattr__(self, "parent", parent)
        size = len(parent)
        if size == 0:
            raise ConfigError("topology needs at least one joint")
        for joint, p in enumerate(parent):
            if not 0 <= p < size:
                raise ConfigError(f"joint {joint} has parent {p}, outside [0, {size})")
        for joint in range(size):
            seen = {joint}
            current = joint
            while parent[current] != current:
                current = parent[current]
                if current in seen:
                    raise ConfigError(f"topology has a cycle through joint {joint}")
                seen.add(current)

    @property
    def num_joints(self) -> int:
        return len(self.parent)

    @property
    def roots(self) -> List[int]:
        return [v for v, p in enumerate(self.parent) if p == v]

    def chain_to_root(self, joint: int) -> List[int]:
        """Joints from ``joint`` up to (and including) its root."""
        chain = [joint]
        while self.parent[chain[-1]] != chain[-1]:
            chain.append(self.parent[chain[-1]])
        return chain

    def to_json(self) -> str:
        return json.dumps(list(self.parent))


def topology_from_json(text: str) -> SkeletonTopology:
    data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("parent")
    if not isinstance(data, list):
        raise ConfigError("topology file must be a JSON array parent[V0] (or {\"parent\": [...]})")
    return SkeletonTopology(tuple(data))


def load_topology(path: Union[str, Path]) -> SkeletonTopology:
    return topology_from_json(Path(path).read_text(encoding="utf-8"))


def ntu_topology() -> SkeletonTopology:
    """The standard 25-joint NTU RGB+D skeleton."""
    text = resources.files("sttformer.data").joinpath("ntu25.json").read_text(encoding="utf-8")
    return topology_from_json(text)


def chain_topology(num_joints: int) -> SkeletonTopology:
    """Joint 0 is the root, joint v hangs off joint v-1 (synthetic skeletons)."""
    parents: Sequence[int] = [0] + list(range(num_joints - 1))
    return SkeletonTopology(tuple(parents))
