"""
Network assembly.

Per person::

    feature_map -> tuple_encode -> (+PE) -> L x (stta -> iffa) -> GAP -> linear

A batch [B, 3, T0, V0, M] is flattened to the non-empty persons (every
sample keeps at least its first person), pushed through the network as one
batch, and per-person logits are summed back per sample.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from ..core import ops
from ..core.checkpoint import Checkpoint
from ..core.tensor import AdTensor, no_grad
from ..errors import CheckpointError, LayerError, ShapeError, SttfError
from .config import IN_CHANNELS, ModelConfig
from .layers import add_positional_encoding, feature_map, iffa_forward, stta_forward, tuple_encode
from .params import NetworkParams, init_params

logger = logging.getLogger("sttformer.model")


def active_persons(data: np.ndarray) -> List[Tuple[int, int]]:
    """(sample, person) pairs with any non-zero coordinate; at least one per sample."""
    present = np.any(data != 0, axis=(1, 2, 3))     # [B, M]
    pairs: List[Tuple[int, int]] = []
    for b in range(present.shape[0]):
        persons = np.flatnonzero(present[b])
        if persons.size == 0:
            persons = np.array([0])
        pairs.extend((b, int(m)) for m in persons)
    return pairs


def _gather_persons(x: AdTensor, pairs: List[Tuple[int, int]]) -> AdTensor:
    b, c, t, v, m = x.shape
    flat = ops.reshape(ops.transpose(x, (0, 4, 1, 2, 3)), (b * m, c, t, v))
    rows = [bi * m + mi for bi, mi in pairs]
    if rows == list(range(b * m)):
        return flat
    return ops.concat([ops.slice_axis(flat, r, r + 1, axis=0) for r in rows], axis=0)


def forward(
    x: Union[AdTensor, np.ndarray],
    params: NetworkParams,
    cfg: ModelConfig,
    training: bool = False,
    capture_attention: bool = False,
):
    """Logits [B, num_classes] for a batch [B, 3, T0, V0, M].

    With ``capture_attention`` returns ``(logits, maps)`` where ``maps`` holds
    the tanh attention [B', T, h, V, V] of every layer (B' = persons kept).
    """
    if not isinstance(x, AdTensor):
        x = AdTensor(x, dtype=params.classifier.weight.dtype)
    expected = (IN_CHANNELS, cfg.num_frames, cfg.num_joints)
    if x.ndim != 5 or x.shape[1:4] != expected:
        raise ShapeError(f"forward: expected [B, {IN_CHANNELS}, T0, V0, M] with (3, T0, V0)={expected}, got {x.shape}")
    batch = x.shape[0]

    pairs = active_persons(x.data)
    persons = _gather_persons(x, pairs)
    slope = cfg.leaky_slope

    h = feature_map(persons, params.feature_map, params.feature_norm, slope, training)
    h = tuple_encode(h, params.tuple_encode, cfg.n, slope)
    if cfg.pe_enabled:
        h = add_positional_encoding(h)

    maps: Optional[List[np.ndarray]] = [] if capture_attention else None
    for index, layer in enumerate(params.layers):
        try:
            h = stta_forward(h, layer, cfg, training, capture=maps)
            if cfg.iffa_enabled:
                h = iffa_forward(h, layer, cfg, training)
        except LayerError:
            raise
        except SttfError as exc:
            raise LayerError(index, exc) from exc

    pooled = ops.global_avg_pool(h)
    person_logits = ops.linear(pooled, params.classifier.weight, params.classifier.bias)

    membership = np.zeros((batch, len(pairs)))
    for row, (b, _) in enumerate(pairs):
        membership[b, row] = 1.0
    logits = ops.batched_matmul(AdTensor(membership, dtype=person_logits.dtype), person_logits)
    if capture_attention:
        return logits, maps
    return logits


@dataclass
class SttFormer:
    """A config bound to its parameters; the unit that is trained, saved and evaluated."""
    config: ModelConfig
    params: NetworkParams

    @classmethod
    def create(cls, config: ModelConfig, seed: int = 0) -> "SttFormer":
        return cls(config=config, params=init_params(config, seed))

    def logits(self, batch: np.ndarray) -> np.ndarray:
        """Eval-mode logits without recording a tape."""
        with no_grad():
            return forward(batch, self.params, self.config, training=False).data

    def to_checkpoint(self, extra_arrays=None, metadata=None) -> Checkpoint:
        arrays = self.params.state_arrays()
        arrays.update(extra_arrays or {})
        return Checkpoint(config=self.config.to_dict(), arrays=arrays, metadata=dict(metadata or {}))

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "SttFormer":
        try:
            config = ModelConfig.from_dict(checkpoint.config)
        except SttfError as exc:
            raise CheckpointError(f"checkpoint carries an invalid model config: {exc}") from exc
        dtype = np.dtype(checkpoint.arrays["classifier.weight"].dtype) if "classifier.weight" in checkpoint.arrays else None
        params = init_params(config, seed=0, dtype=dtype)
        params.load_state_arrays(checkpoint.arrays)
        return cls(config=config, params=params)
