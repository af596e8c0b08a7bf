"""Tensor core: autodiff tensors, differentiable ops, gradient checks, checkpoints."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import grad_check, grad_check_tensors
from .ops import (
    RunningStats,
    add,
    batch_norm,
    batched_matmul,
    concat,
    conv2d,
    expand,
    global_avg_pool,
    leaky_relu,
    linear,
    pad_edge,
    reshape,
    scale,
    slice_axis,
    softmax,
    softmax_cross_entropy,
    tanh,
    transpose,
)
from .tensor import AdTensor, Tape, get_dtype, no_grad, precision, set_precision, tensor

__all__ = [
    "AdTensor",
    "Tape",
    "tensor",
    "no_grad",
    "precision",
    "set_precision",
    "get_dtype",
    "RunningStats",
    "conv2d",
    "batch_norm",
    "leaky_relu",
    "tanh",
    "batched_matmul",
    "linear",
    "reshape",
    "transpose",
    "concat",
    "slice_axis",
    "pad_edge",
    "expand",
    "add",
    "scale",
    "global_avg_pool",
    "softmax",
    "softmax_cross_entropy",
    "grad_check",
    "grad_check_tensors",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
