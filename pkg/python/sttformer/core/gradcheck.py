"""
Finite-difference verification of tape gradients.

``grad_check`` compares the tape gradient of a scalar function against
central differences ``(f(x+eps) - f(x-eps)) / (2*eps)``, coordinate by
coordinate, and reports the worst relative error::

    |analytic - numeric| / max(1e-8, |analytic| + |numeric|)

Checks run in 64-bit precision only; 32-bit rounding swamps the differences.
"""

import logging
from typing import Callable, Dict, List, Mapping, Sequence, Union

import numpy as np

from ..errors import ConfigError, ShapeError
from .tensor import AdTensor, Tape, no_grad

logger = logging.getLogger("sttformer.tensor")

RELATIVE_FLOOR = 1e-8


def _require_f64(tensors: Sequence[AdTensor]) -> None:
    for t in tensors:
        if t.dtype != np.float64:
            raise ConfigError(
                f"gradient checks need 64-bit tensors, got {t.dtype} for {t.name or t.shape}"
            )


def _scalar(out: AdTensor) -> float:
    if out.size != 1:
        raise ShapeError(f"gradient check needs a scalar-valued function, got shape {out.shape}")
    return float(out.data.reshape(-1)[0])


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    diff = np.abs(analytic - numeric)
    denom = np.maximum(RELATIVE_FLOOR, np.abs(analytic) + np.abs(numeric))
    return float(np.max(diff / denom))


def analytic_gradients(loss_fn: Callable[[], AdTensor], tensors: Sequence[AdTensor]) -> List[np.ndarray]:
    """Tape gradients of ``loss_fn()`` w.r.t. ``tensors`` (zeros when unreached)."""
    flags = [t.requires_grad for t in tensors]
    for t in tensors:
        t.requires_grad = True
        t.grad = None
    tape = Tape()
    try:
        with tape:
            out = loss_fn()
            _scalar(out)
            tape.backward(out)
        return [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    finally:
        tape.clear()
        for t, flag in zip(tensors, flags):
            t.requires_grad = flag
            t.grad = None


def numeric_gradient(loss_fn: Callable[[], AdTensor], target: AdTensor, eps: float) -> np.ndarray:
    """Central differences of ``loss_fn()`` w.r.t. each coordinate of ``target``."""
    flat = target.data.reshape(-1)
    grad = np.zeros(flat.shape, dtype=np.float64)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            plus = _scalar(loss_fn())
            flat[i] = original - eps
            minus = _scalar(loss_fn())
            flat[i] = original
            grad[i] = (plus - minus) / (2.0 * eps)
    return grad.reshape(target.shape)


def grad_check_tensors(
    loss_fn: Callable[[], AdTensor],
    tensors: Union[Sequence[AdTensor], Mapping[str, AdTensor]],
    eps: float = 1e-4,
) -> Dict[str, float]:
    """Max relative error per tensor for a closure over ``tensors``."""
    if isinstance(tensors, Mapping):
        named = list(tensors.items())
    else:
        named = [(t.name or f"tensor{i}", t) for i, t in enumerate(tensors)]
    _require_f64([t for _, t in named])
    analytic = analytic_gradients(loss_fn, [t for _, t in named])
    errors: Dict[str, float] = {}
    for (name, t), a in zip(named, analytic):
        errors[name] = relative_error(a, numeric_gradient(loss_fn, t, eps))
        logger.debug("grad check %s %s: max rel error %.3e", name, t.shape, errors[name])
    return errors


def grad_check(f: Callable[[AdTensor], AdTensor], x: AdTensor, eps: float = 1e-4) -> float:
    """Max relative error between tape and finite-difference gradients of ``f`` at ``x``."""
    return grad_check_tensors(lambda: f(x), [x], eps)[x.name or "tensor0"]
