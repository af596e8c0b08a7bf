"""
SGD with Nesterov momentum and the step learning-rate schedule.

Update rule, per parameter (lookahead form)::

    g <- grad + wd * param          (decayed parameters only)
    v <- m * v + g
    param <- param - lr * (g + m * v)

Weight decay applies to conv and linear weights (names ending in
``.weight``), never to batch-norm parameters or the spatial bias R.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from ..core.tensor import AdTensor
from ..errors import ConfigError, NonFiniteGradientError

logger = logging.getLogger("sttformer.training")

VELOCITY_PREFIX = "optim.velocity."


def decays_weight(name: str) -> bool:
    return name.endswith(".weight")


@dataclass
class OptimizerState:
    lr: float
    momentum: float = 0.9
    weight_decay: float = 5e-4
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {VELOCITY_PREFIX + name: v.copy() for name, v in self.velocity.items()}

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        self.velocity = {
            name[len(VELOCITY_PREFIX):]: np.array(array)
            for name, array in arrays.items()
            if name.startswith(VELOCITY_PREFIX)
        }


def sgd_nesterov_step(
    params: Mapping[str, AdTensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: OptimizerState,
    decays: Callable[[str], bool] = decays_weight,
) -> None:
    """Update ``params`` in place. Parameters without a gradient are left untouched."""
    lr = state.lr
    m = state.momentum
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise ConfigError(f"gradient for '{name}' has shape {grad.shape}, parameter has {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name)
        g = grad + state.weight_decay * param.data if state.weight_decay and decays(name) else grad
        velocity = state.velocity.get(name)
        if velocity is None:
            velocity = np.zeros_like(param.data)
        velocity = m * velocity + g
        state.velocity[name] = velocity.astype(param.dtype, copy=False)
        param.data -= (lr * (g + m * velocity)).astype(param.dtype, copy=False)


# ---------------------------------------------------------------------------
# Schedule
# ---------------------------------------------------------------------------

@dataclass
class TrainSchedule:
    """Epoch budget, step LR schedule and batching of one training run."""
    epochs: int = 90
    base_lr: float = 0.1
    milestones: Tuple[int, ...] = (60, 80)
    decay: float = 0.1
    batch_size: int = 64
    seed: int = 0
    momentum: float = 0.9
    weight_decay: float = 5e-4

    def __post_init__(self):
        if isinstance(self.milestones, int):
            self.milestones = (self.milestones,)
        self.milestones = tuple(int(m) for m in self.milestones)
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.base_lr < 0:
            raise ConfigError(f"base_lr must be >= 0, got {self.base_lr}")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"decay must be in (0, 1], got {self.decay}")
        previous = -1
        for milestone in self.milestones:
            if milestone <= previous:
                raise ConfigError(f"milestones must be strictly increasing, got {list(self.milestones)}")
            if milestone >= self.epochs:
                raise ConfigError(f"milestone {milestone} is not below epochs={self.epochs}")
            previous = milestone

    def to_dict(self) -> Dict[str, object]:
        return {
            "epochs": self.epochs,
            "base_lr": self.base_lr,
            "milestones": list(self.milestones),
            "decay": self.decay,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
        }


def lr_at(epoch: int, schedule: TrainSchedule) -> float:
    """base_lr times ``decay`` once for every milestone <= epoch."""
    passed = sum(1 for m in schedule.milestones if epoch >= m)
    return schedule.base_lr * schedule.decay ** passed
