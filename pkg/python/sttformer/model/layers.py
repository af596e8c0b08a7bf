"""
Layer forward passes.

Shapes (B batch, T tuples, V = n * V0 tuple-joints)::

    feature_map      [B, 3, T0, V0]   -> [B, C1, T0, V0]
    tuple_encode     [B, C1, T0, V0]  -> [B, C1, T, V]
    tuple_attention  [B, Cin, T, V]   -> [B, Cout, T, V]
    stta_forward     [B, Cin, T, V]   -> [B, Cout, T, V]
    iffa_forward     [B, C, T, V]     -> [B, C, T, V]

Tuple attention is multi-head with tanh normalization: per head,
``A = tanh(Q K^T / sqrt(d_qk) + R)`` and the head output is ``A V``;
attention rows are not normalized. Heads are concatenated on the channel
axis (head-major) before the 1 x k1 output projection.

``normalize=False`` drops batch norms and the projection on the residual
path; it exists for hand-checkable unit tests, not for training.
"""

import math
from typing import List, Optional

import numpy as np

from ..core import ops
from ..core.tensor import AdTensor
from ..data.tuples import check_tuple_length
from ..errors import ConfigError, ShapeError
from .config import IN_CHANNELS, ModelConfig
from .params import ConvParams, NormParams, SttaLayerParams

PE_BASE = 10000.0


def _norm(x: AdTensor, norm: NormParams, training: bool) -> AdTensor:
    return ops.batch_norm(x, norm.gamma, norm.beta, norm.running, training)


def feature_map(x: AdTensor, conv: ConvParams, norm: NormParams, slope: float, training: bool) -> AdTensor:
    """1x1 conv -> BN -> leaky ReLU, lifting the 3 coordinates to C1 channels."""
    if x.ndim != 4 or x.shape[1] != IN_CHANNELS:
        raise ShapeError(f"feature_map: channel axis must have {IN_CHANNELS} coordinates, got shape {x.shape}")
    return ops.leaky_relu(_norm(ops.conv2d(x, conv.weight, conv.bias), norm, training), slope)


def tuple_encode(x: AdTensor, conv: ConvParams, n: int, slope: float) -> AdTensor:
    """Partition into tuples of ``n`` frames (frame-major flatten), then 1x1 conv + leaky ReLU."""
    b, c, frames, joints = x.shape
    check_tuple_length(frames, n)
    tuples = ops.reshape(x, (b, c, frames // n, n * joints))
    return ops.leaky_relu(ops.conv2d(tuples, conv.weight, conv.bias), slope)


def positional_encoding(channels: int, positions: int) -> np.ndarray:
    """Sinusoid table [C, V] in 64-bit.

    PE[2i, p] = sin(p / 10000^(2i/C)), PE[2i+1, p] = cos(p / 10000^(2i/C)).
    """
    if channels % 2:
        raise ConfigError(f"positional encoding needs an even channel count, got {channels}")
    p = np.arange(positions, dtype=np.float64)[None, :]
    i = np.arange(0, channels, 2, dtype=np.float64)[:, None]
    angle = p / np.power(PE_BASE, i / channels)
    table = np.empty((channels, positions), dtype=np.float64)
    table[0::2] = np.sin(angle)
    table[1::2] = np.cos(angle)
    return table


def add_positional_encoding(x: AdTensor) -> AdTensor:
    """Add the same table to every tuple and batch element of [B, C, T, V]."""
    b, c, t, v = x.shape
    table = AdTensor(positional_encoding(c, v).reshape(1, c, 1, v), dtype=x.dtype)
    return ops.add(x, ops.expand(table, x.shape))


def tuple_attention(
    x: AdTensor,
    layer: SttaLayerParams,
    cfg: ModelConfig,
    capture: Optional[List[np.ndarray]] = None,
) -> AdTensor:
    """Multi-head tanh attention over all joints of each tuple, then the 1 x k1 projection."""
    b, cin, t, v = x.shape
    h, dqk = cfg.heads, cfg.qk_dim_per_head
    cout = layer.out_channels
    if cout % h:
        raise ConfigError(f"output width {cout} is not divisible by heads={h}")
    if cin != layer.in_channels:
        raise ShapeError(f"tuple_attention: channel axis has {cin} channels, layer expects {layer.in_channels}")
    dv = cout // h
    qk = h * dqk

    qkv = ops.conv2d(x, layer.qkv.weight, layer.qkv.bias)
    q = ops.reshape(ops.slice_axis(qkv, 0, qk, axis=1), (b, h, dqk, t, v))
    k = ops.reshape(ops.slice_axis(qkv, qk, 2 * qk, axis=1), (b, h, dqk, t, v))
    val = ops.reshape(ops.slice_axis(qkv, 2 * qk, 2 * qk + cout, axis=1), (b, h, dv, t, v))

    q = ops.transpose(q, (0, 3, 1, 4, 2))          # [B, T, h, V, d]
    k = ops.transpose(k, (0, 3, 1, 2, 4))          # [B, T, h, d, V]
    val = ops.transpose(val, (0, 3, 1, 4, 2))      # [B, T, h, V, dv]

    logits = ops.scale(ops.batched_matmul(q, k), 1.0 / math.sqrt(dqk))
    if layer.spatial_bias is not None:
        if layer.spatial_bias.shape != (h, v, v):
            raise ShapeError(
                f"tuple_attention: spatial bias has shape {layer.spatial_bias.shape}, expected {(h, v, v)}"
            )
        bias = ops.reshape(layer.spatial_bias, (1, 1, h, v, v))
        logits = ops.add(logits, ops.expand(bias, logits.shape))
    attention = ops.tanh(logits)
    if capture is not None:
        capture.append(attention.data.copy())

    heads = ops.batched_matmul(attention, val)     # [B, T, h, V, dv]
    heads = ops.reshape(ops.transpose(heads, (0, 2, 4, 1, 3)), (b, cout, t, v))
    pad = cfg.k1 // 2
    return ops.conv2d(heads, layer.out_proj.weight, layer.out_proj.bias, padding=(0, pad))


def _residual(x: AdTensor, layer: SttaLayerParams, training: bool, normalize: bool) -> AdTensor:
    if layer.residual is None:
        return x
    projected = ops.conv2d(x, layer.residual.weight)
    return _norm(projected, layer.residual_norm, training) if normalize else projected


def stta_forward(
    x: AdTensor,
    layer: SttaLayerParams,
    cfg: ModelConfig,
    training: bool,
    normalize: bool = True,
    capture: Optional[List[np.ndarray]] = None,
) -> AdTensor:
    """attention -> BN -> +residual -> leaky ReLU -> 1x1 feed-forward -> BN -> +residual -> leaky ReLU."""
    slope = cfg.leaky_slope
    attended = tuple_attention(x, layer, cfg, capture)
    if normalize:
        attended = _norm(attended, layer.out_norm, training)
    y = ops.leaky_relu(ops.add(attended, _residual(x, layer, training, normalize)), slope)
    fed = ops.conv2d(y, layer.ff.weight, layer.ff.bias)
    if normalize:
        fed = _norm(fed, layer.ff_norm, training)
    return ops.leaky_relu(ops.add(fed, y), slope)


def iffa_forward(
    x: AdTensor,
    layer: SttaLayerParams,
    cfg: ModelConfig,
    training: bool,
    normalize: bool = True,
) -> AdTensor:
    """k2 x 1 conv over the tuple axis (edge-replicated same padding) -> BN -> +x -> leaky ReLU."""
    if layer.iffa is None:
        return x
    pad = cfg.k2 // 2
    padded = ops.pad_edge(x, pad, pad, axis=2) if pad else x
    aggregated = ops.conv2d(padded, layer.iffa.weight, layer.iffa.bias)
    if normalize:
        aggregated = _norm(aggregated, layer.iffa_norm, training)
    return ops.leaky_relu(ops.add(aggregated, x), cfg.leaky_slope)
