"""
Whole-network gradient check.

Runs the tiny network in 64-bit train mode and compares tape gradients of
the cross-entropy loss against central differences for the input and
every parameter. Fresh parameters put many leaky-ReLU inputs near zero,
where finite differences straddle the kink, so the check first moves the
network to a generic point: random spatial biases, and batch-norm betas
and the tuple-encoding bias shifted well into the positive branch. Input
draws whose smallest |leaky-ReLU input| is below ``MIN_MARGIN`` are
rejected.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..core.gradcheck import grad_check_tensors
from ..core import ops
from ..core.ops import RunningStats, leaky_margin, softmax_cross_entropy
from ..core.tensor import AdTensor, Tape, precision
from ..errors import ConfigError
from .config import IN_CHANNELS, ModelConfig, tiny_config
from .network import forward
from .params import NetworkParams, init_params

logger = logging.getLogger("sttformer.model")

MIN_MARGIN = 5e-3
MAX_DRAWS = 50
TOLERANCE = 1e-4


@dataclass
class NetworkGradCheck:
    errors: Dict[str, float] = field(default_factory=dict)
    margin: float = 0.0
    draws: int = 0

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def worst(self) -> Optional[str]:
        return max(self.errors, key=self.errors.get) if self.errors else None

    def passed(self, tolerance: float = TOLERANCE) -> bool:
        return self.max_error < tolerance


def move_to_generic_point(params: NetworkParams, rng: np.random.Generator) -> None:
    for name, tensor in params.named_parameters().items():
        if name.endswith(".beta"):
            tensor.data[...] = rng.uniform(2.5, 3.5, size=tensor.shape)
        elif name.endswith(".gamma"):
            tensor.data[...] = rng.uniform(0.8, 1.2, size=tensor.shape)
        elif name.endswith("spatial_bias"):
            tensor.data[...] = rng.uniform(-0.1, 0.1, size=tensor.shape)
        elif name == "tuple_encode.bias":
            tensor.data[...] = rng.uniform(3.5, 4.5, size=tensor.shape)
        elif name.endswith(".bias"):
            tensor.data[...] = rng.uniform(-0.1, 0.1, size=tensor.shape)


def check_network_gradients(
    cfg: Optional[ModelConfig] = None,
    seed: int = 0,
    batch: int = 2,
    eps: float = 1e-4,
) -> NetworkGradCheck:
    cfg = cfg or tiny_config()
    if cfg.num_classes < 2:
        raise ConfigError("network gradient check needs at least two classes")
    with precision("f64"):
        rng = np.random.default_rng(seed)
        params = init_params(cfg, seed)
        move_to_generic_point(params, rng)
        named = params.named_parameters()
        labels = np.arange(batch) % cfg.num_classes
        shape = (batch, IN_CHANNELS, cfg.num_frames, cfg.num_joints, 1)

        for draw in range(1, MAX_DRAWS + 1):
            x = AdTensor(rng.standard_normal(shape), name="input")

            def loss_fn():
                return softmax_cross_entropy(forward(x, params, cfg, training=True), labels)

            tape = Tape()
            with tape:
                loss_fn()
                margin = leaky_margin(tape.nodes)
            tape.clear()
            if margin >= MIN_MARGIN:
                break
            logger.debug("draw %d rejected: leaky margin %.2e", draw, margin)
        else:
            raise ConfigError(f"no input draw with leaky margin >= {MIN_MARGIN} in {MAX_DRAWS} tries")

        tensors = {"input": x, **named}
        errors = grad_check_tensors(loss_fn, tensors, eps)
    result = NetworkGradCheck(errors=errors, margin=margin, draws=draw)
    logger.info("network grad check: max rel error %.3e (%s), margin %.2e", result.max_error, result.worst, margin)
    return result


def check_op_gradients(seed: int = 0, eps: float = 1e-4) -> Dict[str, float]:
    """Max relative error per differentiable op on small random inputs."""
    results: Dict[str, float] = {}
    with precision("f64"):
        rng = np.random.default_rng(seed)

        def t(*shape, shift=0.0):
            return AdTensor(rng.standard_normal(shape) + shift, requires_grad=True)

        def weighted(out):
            # random projection to a scalar so every output coordinate matters
            w = AdTensor(np.random.default_rng(seed + 1).standard_normal((out.size, 1)))
            return ops.batched_matmul(ops.reshape(out, (1, out.size)), w)

        x, w, b = t(2, 3, 4, 5), t(4, 3, 1, 3), t(4)
        results["conv2d"] = _worst(grad_check_tensors(
            lambda: weighted(ops.conv2d(x, w, b, padding=(0, 1))), [x, w, b], eps))
        x, g, be = t(3, 2, 2, 3), t(2, shift=1.0), t(2)
        stats = RunningStats.fresh(2, np.float64)
        results["batch_norm"] = _worst(grad_check_tensors(
            lambda: weighted(ops.batch_norm(x, g, be, stats, training=True)), [x, g, be], eps))
        x = AdTensor(rng.uniform(0.1, 1.0, (2, 3)) * rng.choice([-1.0, 1.0], (2, 3)), requires_grad=True)
        results["leaky_relu"] = _worst(grad_check_tensors(
            lambda: weighted(ops.leaky_relu(x, 0.1)), [x], eps))
        x = t(2, 3)
        results["tanh"] = _worst(grad_check_tensors(lambda: weighted(ops.tanh(x)), [x], eps))
        a, c = t(2, 3, 4), t(1, 4, 2)
        results["batched_matmul"] = _worst(grad_check_tensors(
            lambda: weighted(ops.batched_matmul(a, c)), [a, c], eps))
        x, w, b = t(3, 4), t(2, 4), t(2)
        results["linear"] = _worst(grad_check_tensors(lambda: weighted(ops.linear(x, w, b)), [x, w, b], eps))
        x, y = t(2, 3, 4), t(2, 1, 4)
        results["concat"] = _worst(grad_check_tensors(
            lambda: weighted(ops.concat([ops.transpose(x, (0, 2, 1)), ops.transpose(y, (0, 2, 1))], axis=2)),
            [x, y], eps))
        x = t(2, 3, 4, 2)
        results["pad_edge"] = _worst(grad_check_tensors(
            lambda: weighted(ops.pad_edge(x, 1, 2, axis=2)), [x], eps))
        x = t(1, 3)
        results["expand"] = _worst(grad_check_tensors(lambda: weighted(ops.expand(x, (4, 3))), [x], eps))
        x = t(3, 5)
        labels = np.array([0, 4, 2])
        results["softmax_cross_entropy"] = _worst(grad_check_tensors(
            lambda: ops.softmax_cross_entropy(x, labels), [x], eps))
    for name, error in results.items():
        logger.debug("op grad check %s: %.3e", name, error)
    return results


def _worst(errors: Dict[str, float]) -> float:
    return max(errors.values())
