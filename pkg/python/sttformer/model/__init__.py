"""The network: configuration, parameters, layers and assembly."""

from .config import ModelConfig, tiny_config
from .layers import (
    feature_map,
    iffa_forward,
    positional_encoding,
    stta_forward,
    tuple_attention,
    tuple_encode,
)
from .network import SttFormer, forward
from .params import NetworkParams, SttaLayerParams, count_params, init_params

__all__ = [
    "ModelConfig",
    "tiny_config",
    "NetworkParams",
    "SttaLayerParams",
    "init_params",
    "count_params",
    "feature_map",
    "tuple_encode",
    "positional_encoding",
    "tuple_attention",
    "stta_forward",
    "iffa_forward",
    "forward",
    "SttFormer",
]
