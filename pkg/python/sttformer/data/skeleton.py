"""
Skeleton sequences: parsing, the internal interchange format, length
normalization and data modes.

NTU-style ``.skeleton`` text layout::

    <frame count>
    per frame:
        <body count>
        per body:
            <body info line>            first field = body id
            <joint count>
            per joint: x y z [...]      first three fields are metres

Internal ``.sttd`` layout (little-endian)::

    u32 header length | JSON header | raw coords blob [C0, T, V0, M] (C order)

The JSON header holds ``format``, ``version``, ``C0``, ``T``, ``V0``, ``M``,
``dtype`` and the label/split fields.
"""

import dataclasses
import json
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigError, SkeletonFormatError, SkeletonParseError
from .topology import SkeletonTopology

logger = logging.getLogger("sttformer.data")

NUM_CHANNELS = 3
NTU_JOINTS = 25
MAX_PERSONS = 2

MODES = ("joint", "bone", "motion", "bone_motion")

STTD_VERSION = 1

_NTU_NAME = re.compile(r"S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3})")


# ---------------------------------------------------------------------------
# Sequence
# ---------------------------------------------------------------------------

@dataclass
class SkeletonSequence:
    """Per-frame 3-D joint coordinates of up to M persons.

    ``coords`` is [C0=3, T, V0, M]; absent persons are all-zero slices.
    """
    coords: np.ndarray
    label: int = -1
    subject_id: int = 0
    camera_id: int = 0
    setup_id: int = 0
    name: str = ""

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 4:
            raise SkeletonFormatError(
                f"coords must be [C0, T, V0, M], got shape {self.coords.shape}"
            )
        if self.coords.shape[0] != NUM_CHANNELS:
            raise SkeletonFormatError(f"coords need C0=3 channels, got {self.coords.shape[0]}")
        if self.coords.shape[1] < 1:
            raise SkeletonFormatError("a sequence needs at least one frame")

    @property
    def num_frames(self) -> int:
        return self.coords.shape[1]

    @property
    def num_joints(self) -> int:
        return self.coords.shape[2]

    @property
    def num_persons(self) -> int:
        return self.coords.shape[3]

    def person_mask(self) -> np.ndarray:
        """True for persons with any non-zero coordinate."""
        return np.any(self.coords != 0, axis=(0, 1, 2))

    def with_coords(self, coords: np.ndarray) -> "SkeletonSequence":
        return dataclasses.replace(self, coords=coords)


# ---------------------------------------------------------------------------
# NTU text format
# ---------------------------------------------------------------------------

class _Lines:
    """Line cursor over non-blank lines that remembers 1-based line numbers."""

    def __init__(self, text: str):
        self._lines = [
            (number, line.strip())
            for number, line in enumerate(text.splitlines(), 1)
            if line.strip()
        ]
        self._index = 0

    def next(self, what: str) -> Tuple[int, str]:
        if self._index >= len(self._lines):
            last = self._lines[-1][0] if self._lines else 0
            raise SkeletonParseError(f"unexpected end of file, expected {what}", last + 1)
        item = self._lines[self._index]
        self._index += 1
        return item

    def next_int(self, what: str) -> Tuple[int, int]:
        number, line = self.next(what)
        try:
            return number, int(line.split()[0])
        except ValueError:
            raise SkeletonParseError(f"expected {what} (integer), got {line!r}", number) from None


def _motion_energy(trajectory: np.ndarray, present: np.ndarray) -> float:
    """Sum of |frame-to-frame deltas| over frames where the body is present in both."""
    if trajectory.shape[1] < 2:
        return 0.0
    both = present[1:] & present[:-1]
    deltas = np.abs(np.diff(trajectory, axis=1))[:, both]
    return float(deltas.sum())


def parse_skeleton_file(
    data: Union[bytes, str],
    num_joints: int = NTU_JOINTS,
    max_persons: int = MAX_PERSONS,
    name: str = "",
) -> SkeletonSequence:
    """Parse NTU-style skeleton text.

    Bodies are tracked by body id across frames. When more than
    ``max_persons`` bodies appear, the ones with the most motion are kept
    (ties keep first-seen order).
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = _Lines(text)
    _, num_frames = lines.next_int("frame count")
    if num_frames < 1:
        raise SkeletonFormatError(f"frame count must be >= 1, got {num_frames}")

    tracks: Dict[str, np.ndarray] = {}
    present: Dict[str, np.ndarray] = {}
    for t in range(num_frames):
        _, num_bodies = lines.next_int(f"body count of frame {t}")
        seen_in_frame = set()
        for slot in range(num_bodies):
            number, info = lines.next(f"body info line of frame {t}")
            body_id = info.split()[0]
            if body_id in seen_in_frame:
                body_id = f"{body_id}#{slot}"
            seen_in_frame.add(body_id)
            count_line, joints = lines.next_int("joint count")
            if joints != num_joints:
                raise SkeletonFormatError(
                    f"line {count_line}: expected {num_joints} joints, got {joints}"
                )
            if body_id not in tracks:
                tracks[body_id] = np.zeros((NUM_CHANNELS, num_frames, num_joints))
                present[body_id] = np.zeros(num_frames, dtype=bool)
            present[body_id][t] = True
            for v in range(num_joints):
                number, line = lines.next(f"joint {v} line")
                fields = line.split()
                if len(fields) < 3:
                    raise SkeletonParseError(f"joint line needs x y z, got {line!r}", number)
                try:
                    tracks[body_id][:, t, v] = [float(f) for f in fields[:3]]
                except ValueError:
                    raise SkeletonParseError(f"non-numeric coordinate in {line!r}", number) from None

    order = list(tracks)
    if len(order) > max_persons:
        energy = {body: _motion_energy(tracks[body], present[body]) for body in order}
        ranked = sorted(order, key=lambda body: -energy[body])
        dropped = ranked[max_persons:]
        logger.debug("%s: dropping %d low-motion bodies: %s", name or "<skeleton>", len(dropped), dropped)
        order = ranked[:max_persons]

    coords = np.zeros((NUM_CHANNELS, num_frames, num_joints, max_persons))
    for m, body in enumerate(order):
        coords[:, :, :, m] = tracks[body]
    return SkeletonSequence(coords=coords, name=name)


def write_skeleton_text(seq: SkeletonSequence) -> str:
    """Emit ``seq`` in the NTU-style text layout (present persons only)."""
    out: List[str] = [str(seq.num_frames)]
    for t in range(seq.num_frames):
        persons = [m for m in range(seq.num_persons) if np.any(seq.coords[:, t, :, m] != 0)]
        out.append(str(len(persons)))
        for m in persons:
            out.append(f"{72057594037930000 + m} 0 0 0 0 0 0 0.0 0.0 2")
            out.append(str(seq.num_joints))
            for v in range(seq.num_joints):
                x, y, z = (repr(float(c)) for c in seq.coords[:, t, v, m])
                out.append(f"{x} {y} {z} 0 0 0 0 0 0 0 0 2")
    return "\n".join(out) + "\n"


def parse_ntu_name(name: str) -> Dict[str, int]:
    """``S014C002P037R002A050`` -> setup/camera/subject/replication/label (0-based)."""
    match = _NTU_NAME.search(name)
    if match is None:
        raise SkeletonFormatError(f"'{name}' does not follow the SsssCcccPpppRrrrAaaa naming scheme")
    setup, camera, subject, replication, action = (int(g) for g in match.groups())
    return {
        "setup_id": setup,
        "camera_id": camera,
        "subject_id": subject,
        "replication": replication,
        "label": action - 1,
    }


def read_skeleton_file(
    path: Union[str, Path],
    num_joints: int = NTU_JOINTS,
    max_persons: int = MAX_PERSONS,
) -> SkeletonSequence:
    """Parse a ``.skeleton`` file and attach its file-name metadata when present."""
    path = Path(path)
    seq = parse_skeleton_file(path.read_bytes(), num_joints, max_persons, name=path.stem)
    try:
        meta = parse_ntu_name(path.stem)
    except SkeletonFormatError:
        return seq
    return dataclasses.replace(
        seq,
        label=meta["label"],
        subject_id=meta["subject_id"],
        camera_id=meta["camera_id"],
        setup_id=meta["setup_id"],
    )


# ---------------------------------------------------------------------------
# Internal interchange format (.sttd)
# ---------------------------------------------------------------------------

def encode_sttd(seq: SkeletonSequence) -> bytes:
    c0, frames, joints, persons = seq.coords.shape
    header = json.dumps(
        {
            "format": "sttd",
            "version": STTD_VERSION,
            "C0": c0,
            "T": frames,
            "V0": joints,
            "M": persons,
            "dtype": "<f8",
            "label": seq.label,
            "subject_id": seq.subject_id,
            "camera_id": seq.camera_id,
            "setup_id": seq.setup_id,
            "name": seq.name,
        },
        sort_keys=True,
    ).encode("utf-8")
    blob = np.ascontiguousarray(seq.coords, dtype="<f8").tobytes()
    return struct.pack("<I", len(header)) + header + blob


def decode_sttd(blob: bytes) -> SkeletonSequence:
    if len(blob) < 4:
        raise SkeletonFormatError("truncated .sttd data (no header length)")
    (header_len,) = struct.unpack("<I", blob[:4])
    try:
        header = json.loads(blob[4:4 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SkeletonFormatError(f"unreadable .sttd header: {exc}") from None
    if header.get("format") != "sttd" or header.get("version") != STTD_VERSION:
        raise SkeletonFormatError(f"unsupported .sttd header {header.get('format')!r} v{header.get('version')}")
    shape = (header["C0"], header["T"], header["V0"], header["M"])
    payload = blob[4 + header_len:]
    expected = int(np.prod(shape)) * 8
    if len(payload) != expected:
        raise SkeletonFormatError(f".sttd payload has {len(payload)} bytes, expected {expected}")
    coords = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    return SkeletonSequence(
        coords=coords,
        label=header.get("label", -1),
        subject_id=header.get("subject_id", 0),
        camera_id=header.get("camera_id", 0),
        setup_id=header.get("setup_id", 0),
        name=header.get("name", ""),
    )


def save_sttd(seq: SkeletonSequence, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_sttd(seq))
    return path


def load_sttd(path: Union[str, Path]) -> SkeletonSequence:
    return decode_sttd(Path(path).read_bytes())


def load_dataset_dir(directory: Union[str, Path]) -> List[SkeletonSequence]:
    """All ``.sttd`` files of a directory, in file-name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"dataset directory not found: {directory}")
    return [load_sttd(p) for p in sorted(directory.glob("*.sttd"))]


# ---------------------------------------------------------------------------
# Length normalization and modes
# ---------------------------------------------------------------------------

def replay_indices(num_frames: int, target: int) -> np.ndarray:
    """Frame indices that bring ``num_frames`` to exactly ``target`` frames."""
    if target <= 0:
        raise ConfigError(f"target length T0 must be positive, got {target}")
    if num_frames < 1:
        raise SkeletonFormatError("cannot pad an empty sequence")
    steps = np.arange(target)
    if num_frames < target:
        return steps % num_frames
    if num_frames > target:
        return (steps * num_frames) // target
    return steps


def replay_pad(seq: SkeletonSequence, target: int) -> SkeletonSequence:
    """Cycle short sequences from the start, subsample long ones uniformly."""
    index = replay_indices(seq.num_frames, target)
    return seq.with_coords(seq.coords[:, index])


def to_bone_mode(seq: SkeletonSequence, topology: SkeletonTopology) -> SkeletonSequence:
    """bone[v] = joint[v] - joint[parent(v)]; roots become zero vectors."""
    if topology.num_joints != seq.num_joints:
        raise SkeletonFormatError(
            f"topology has {topology.num_joints} joints, sequence has {seq.num_joints}"
        )
    parent = np.asarray(topology.parent)
    return seq.with_coords(seq.coords - seq.coords[:, :, parent, :])


def to_motion_mode(seq: SkeletonSequence) -> SkeletonSequence:
    """motion[t] = joint[t+1] - joint[t]; the last frame is zero."""
    motion = np.zeros_like(seq.coords)
    motion[:, :-1] = seq.coords[:, 1:] - seq.coords[:, :-1]
    return seq.with_coords(motion)


def derive_mode(seq: SkeletonSequence, mode: str, topology: Optional[SkeletonTopology] = None) -> SkeletonSequence:
    if mode == "joint":
        return seq
    if mode == "motion":
        return to_motion_mode(seq)
    if mode not in MODES:
        raise ConfigError(f"unknown data mode '{mode}'. Valid modes: {', '.join(MODES)}")
    if topology is None:
        raise ConfigError(f"mode '{mode}' needs a skeleton topology")
    bones = to_bone_mode(seq, topology)
    return bones if mode == "bone" else to_motion_mode(bones)
