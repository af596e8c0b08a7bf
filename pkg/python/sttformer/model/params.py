"""
Parameter registry of the network.

Parameters are grouped in small dataclasses that mirror the layer
structure; every group can list its tensors under dotted names
(``layers.3.qkv.weight``) in a fixed order. Batch-norm running statistics
are buffers: they are checkpointed but never trained.

Initialization: conv/linear weights uniform in +-1/sqrt(fan_in), biases and
the spatial regularization R zero, batch-norm gamma one and beta zero.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..core.ops import RunningStats
from ..core.tensor import AdTensor, get_dtype
from ..errors import CheckpointError
from .config import IN_CHANNELS, ModelConfig

logger = logging.getLogger("sttformer.model")


def _param(array: np.ndarray, dtype) -> AdTensor:
    return AdTensor(array, requires_grad=True, dtype=dtype)


def _uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype) -> AdTensor:
    bound = 1.0 / np.sqrt(fan_in)
    return _param(rng.uniform(-bound, bound, size=shape), dtype)


# ---------------------------------------------------------------------------
# Parameter groups
# ---------------------------------------------------------------------------

@dataclass
class ConvParams:
    weight: AdTensor
    bias: Optional[AdTensor] = None

    @classmethod
    def init(cls, rng, cout: int, cin: int, kernel: Tuple[int, int], bias: bool, dtype) -> "ConvParams":
        fan_in = cin * kernel[0] * kernel[1]
        weight = _uniform(rng, (cout, cin) + tuple(kernel), fan_in, dtype)
        return cls(weight=weight, bias=_param(np.zeros(cout), dtype) if bias else None)

    def named(self, prefix: str) -> Iterator[Tuple[str, AdTensor]]:
        yield f"{prefix}.weight", self.weight
        if self.bias is not None:
            yield f"{prefix}.bias", self.bias


@dataclass
class NormParams:
    gamma: AdTensor
    beta: AdTensor
    running: RunningStats

    @classmethod
    def init(cls, channels: int, dtype) -> "NormParams":
        return cls(
            gamma=_param(np.ones(channels), dtype),
            beta=_param(np.zeros(channels), dtype),
            running=RunningStats.fresh(channels, dtype),
        )

    def named(self, prefix: str) -> Iterator[Tuple[str, AdTensor]]:
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta

    def buffers(self, prefix: str) -> Iterator[Tuple[str, np.ndarray]]:
        yield f"{prefix}.running_mean", self.running.mean
        yield f"{prefix}.running_var", self.running.var


@dataclass
class SttaLayerParams:
    """One stacked layer: tuple attention block plus inter-frame aggregation.

    ``qkv`` projects to ``2 * heads * qk_dim_per_head`` query/key channels
    followed by ``C_out`` value channels. ``spatial_bias`` is R [h, V, V].
    """
    in_channels: int
    out_channels: int
    qkv: ConvParams
    spatial_bias: Optional[AdTensor]
    out_proj: ConvParams
    out_norm: NormParams
    ff: ConvParams
    ff_norm: NormParams
    residual: Optional[ConvParams] = None
    residual_norm: Optional[NormParams] = None
    iffa: Optional[ConvParams] = None
    iffa_norm: Optional[NormParams] = None

    @classmethod
    def init(cls, rng, cfg: ModelConfig, cin: int, cout: int, dtype) -> "SttaLayerParams":
        qk = 2 * cfg.heads * cfg.qk_dim_per_head
        v = cfg.tuple_joints
        layer = cls(
            in_channels=cin,
            out_channels=cout,
            qkv=ConvParams.init(rng, qk + cout, cin, (1, 1), bias=True, dtype=dtype),
            spatial_bias=_param(np.zeros((cfg.heads, v, v)), dtype) if cfg.sgr_enabled else None,
            out_proj=ConvParams.init(rng, cout, cout, (1, cfg.k1), bias=False, dtype=dtype),
            out_norm=NormParams.init(cout, dtype),
            ff=ConvParams.init(rng, cout, cout, (1, 1), bias=False, dtype=dtype),
            ff_norm=NormParams.init(cout, dtype),
        )
        if cin != cout:
            layer.residual = ConvParams.init(rng, cout, cin, (1, 1), bias=False, dtype=dtype)
            layer.residual_norm = NormParams.init(cout, dtype)
        if cfg.iffa_enabled:
            layer.iffa = ConvParams.init(rng, cout, cout, (cfg.k2, 1), bias=False, dtype=dtype)
            layer.iffa_norm = NormParams.init(cout, dtype)
        return layer

    def named(self, prefix: str) -> Iterator[Tuple[str, AdTensor]]:
        yield from self.qkv.named(f"{prefix}.qkv")
        if self.spatial_bias is not None:
            yield f"{prefix}.spatial_bias", self.spatial_bias
        yield from self.out_proj.named(f"{prefix}.out_proj")
        yield from self.out_norm.named(f"{prefix}.out_norm")
        yield from self.ff.named(f"{prefix}.ff")
        yield from self.ff_norm.named(f"{prefix}.ff_norm")
        if self.residual is not None:
            yield from self.residual.named(f"{prefix}.residual")
            yield from self.residual_norm.named(f"{prefix}.residual_norm")
        if self.iffa is not None:
            yield from self.iffa.named(f"{prefix}.iffa")
            yield from self.iffa_norm.named(f"{prefix}.iffa_norm")

    def norms(self, prefix: str) -> Iterator[Tuple[str, NormParams]]:
        yield f"{prefix}.out_norm", self.out_norm
        yield f"{prefix}.ff_norm", self.ff_norm
        if self.residual_norm is not None:
            yield f"{prefix}.residual_norm", self.residual_norm
        if self.iffa_norm is not None:
            yield f"{prefix}.iffa_norm", self.iffa_norm


@dataclass
class NetworkParams:
    """All trainable tensors and running statistics of one network."""
    feature_map: ConvParams
    feature_norm: NormParams
    tuple_encode: ConvParams
    layers: List[SttaLayerParams] = field(default_factory=list)
    classifier: Optional[ConvParams] = None

    # -- registry walks -------------------------------------------------

    def named_parameters(self) -> Dict[str, AdTensor]:
        named: List[Tuple[str, AdTensor]] = []
        named.extend(self.feature_map.named("feature_map"))
        named.extend(self.feature_norm.named("feature_norm"))
        named.extend(self.tuple_encode.named("tuple_encode"))
        for i, layer in enumerate(self.layers):
            named.extend(layer.named(f"layers.{i}"))
        named.extend(self.classifier.named("classifier"))
        for name, tensor in named:
            tensor.name = name
        return dict(named)

    def norm_groups(self) -> Dict[str, NormParams]:
        groups = [("feature_norm", self.feature_norm)]
        for i, layer in enumerate(self.layers):
            groups.extend(layer.norms(f"layers.{i}"))
        return dict(groups)

    def named_buffers(self) -> Dict[str, np.ndarray]:
        buffers: Dict[str, np.ndarray] = {}
        for prefix, norm in self.norm_groups().items():
            buffers.update(norm.buffers(prefix))
        return buffers

    def num_parameters(self) -> int:
        return sum(t.size for t in self.named_parameters().values())

    def zero_grad(self) -> None:
        for tensor in self.named_parameters().values():
            tensor.grad = None

    # -- state ----------------------------------------------------------

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter and buffer, keyed by name."""
        arrays = {name: t.data.copy() for name, t in self.named_parameters().items()}
        arrays.update({name: b.copy() for name, b in self.named_buffers().items()})
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Overwrite parameters and buffers in place; names and shapes must match."""
        targets: Dict[str, np.ndarray] = {n: t.data for n, t in self.named_parameters().items()}
        targets.update(self.named_buffers())
        missing = sorted(set(targets) - set(arrays))
        if missing:
            raise CheckpointError(f"checkpoint lacks {len(missing)} arrays, first: {missing[0]}")
        for name, target in targets.items():
            source = np.asarray(arrays[name])
            if source.shape != target.shape:
                raise CheckpointError(
                    f"array '{name}' has shape {source.shape}, model expects {target.shape}"
                )
            target[...] = source


def init_params(cfg: ModelConfig, seed: int = 0, dtype=None) -> NetworkParams:
    """Fresh parameters in the current precision, deterministic per seed."""
    dtype = get_dtype() if dtype is None else dtype
    rng = np.random.default_rng(seed)
    params = NetworkParams(
        feature_map=ConvParams.init(rng, cfg.c1, IN_CHANNELS, (1, 1), bias=False, dtype=dtype),
        feature_norm=NormParams.init(cfg.c1, dtype),
        tuple_encode=ConvParams.init(rng, cfg.c1, cfg.c1, (1, 1), bias=True, dtype=dtype),
    )
    for cin, cout in cfg.layer_widths():
        params.layers.append(SttaLayerParams.init(rng, cfg, cin, cout, dtype))
    final = cfg.final_channels
    params.classifier = ConvParams(
        weight=_uniform(rng, (cfg.num_classes, final), final, dtype),
        bias=_param(np.zeros(cfg.num_classes), dtype),
    )
    logger.debug("initialized %d parameters (seed=%d, dtype=%s)", params.num_parameters(), seed, np.dtype(dtype))
    return params


def count_params(cfg: ModelConfig) -> int:
    """Closed-form number of trainable scalars for ``cfg``."""
    c1 = cfg.c1
    total = IN_CHANNELS * c1 + 2 * c1      # feature mapping conv + norm
    total += c1 * c1 + c1                  # tuple encoding conv + bias
    qk = 2 * cfg.heads * cfg.qk_dim_per_head
    v = cfg.tuple_joints
    for cin, cout in cfg.layer_widths():
        total += cin * (qk + cout) + (qk + cout)
        if cfg.sgr_enabled:
            total += cfg.heads * v * v
        total += cout * cout * cfg.k1 + 2 * cout
        total += cout * cout + 2 * cout
        if cin != cout:
            total += cin * cout + 2 * cout
        if cfg.iffa_enabled:
            total += cout * cout * cfg.k2 + 2 * cout
    total += (cfg.final_channels + 1) * cfg.num_classes
    return total
