"""
Checkpoint file format.

Little-endian binary layout::

    magic        4 bytes   b"STTF"
    version      u32       FORMAT_VERSION
    digest       32 bytes  SHA-256 of the canonical model-config JSON
    header_len   u32
    header       JSON      {"config": {...}, "metadata": {...}}
    count        u32       number of arrays
    count x entry, sorted by name:
        name_len u32, name (utf-8), dtype tag u8, rank u32,
        rank x extent u32, raw values (C order)

Arrays cover trainable parameters, batch-norm running statistics and
optimizer velocity buffers (``optim.velocity.<param>``).
"""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from ..errors import CheckpointError

MAGIC = b"STTF"
FORMAT_VERSION = 1

_DTYPE_TAGS = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
_TAG_FOR_KIND = {np.dtype("float32"): 1, np.dtype("float64"): 2, np.dtype("int64"): 3}


def canonical_json(config: Mapping[str, Any]) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_digest(config: Mapping[str, Any]) -> bytes:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).digest()


@dataclass
class Checkpoint:
    """Parameters + running stats + optimizer state, tied to one model config."""
    config: Dict[str, Any]
    arrays: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def digest(self) -> bytes:
        return config_digest(self.config)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = json.dumps(
        {"config": checkpoint.config, "metadata": checkpoint.metadata}, sort_keys=True
    ).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        checkpoint.digest,
        struct.pack("<I", len(header)),
        header,
        struct.pack("<I", len(checkpoint.arrays)),
    ]
    for name in sorted(checkpoint.arrays):
        array = np.asarray(checkpoint.arrays[name])
        tag = _TAG_FOR_KIND.get(array.dtype)
        if tag is None:
            raise CheckpointError(f"unsupported dtype {array.dtype} for array '{name}'")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BI", tag, array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=_DTYPE_TAGS[tag]).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.blob):
            raise CheckpointError(f"truncated checkpoint at byte {self.offset}")
        chunk = self.blob[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(blob: bytes, expected_config: Optional[Mapping[str, Any]] = None) -> Checkpoint:
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    digest = reader.take(32)
    (header_len,) = reader.unpack("<I")
    header = json.loads(reader.take(header_len).decode("utf-8"))
    config = header["config"]
    if config_digest(config) != digest:
        raise CheckpointError("checkpoint config digest does not match its embedded config")
    if expected_config is not None and config_digest(expected_config) != digest:
        raise CheckpointError("checkpoint was written for a different model config")

    (count,) = reader.unpack("<I")
    arrays: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I")
        name = reader.take(name_len).decode("utf-8")
        tag, rank = reader.unpack("<BI")
        if tag not in _DTYPE_TAGS:
            raise CheckpointError(f"unknown dtype tag {tag} for array '{name}'")
        shape = reader.unpack(f"<{rank}I") if rank else ()
        dtype = _DTYPE_TAGS[tag]
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arrays[name] = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    return Checkpoint(config=config, arrays=arrays, metadata=header.get("metadata", {}))


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(checkpoint))
    return path


def load_checkpoint(path: Union[str, Path], expected_config: Optional[Mapping[str, Any]] = None) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), expected_config)
