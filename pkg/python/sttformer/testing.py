"""
Gradient and equivariance assertions for tests and CI.

Fail loudly when a new op's backward rule drifts from its forward, or when
a layer that should treat joints symmetrically starts depending on their
order. Works with any test runner; with pytest the ``sttformer`` fixture
(auto-registered entry point) exposes the same helpers in 64-bit mode.

Usage::

    from sttformer.testing import assert_gradients_match

    def test_linear_backward():
        x = AdTensor(rng.standard_normal((4, 3)), dtype=np.float64)
        w = AdTensor(rng.standard_normal((2, 3)), dtype=np.float64)
        assert_gradients_match(lambda: ops.softmax_cross_entropy(ops.linear(x, w), [0, 1, 1, 0]), [x, w])
"""

from typing import Callable, Dict, Mapping, Sequence, Union

import numpy as np

from .core.gradcheck import grad_check_tensors
from .core.tensor import AdTensor

__all__ = [
    "GradientMismatch",
    "NotEquivariant",
    "assert_gradients_match",
    "assert_equivariant",
]


class GradientMismatch(AssertionError):
    """Tape gradients disagree with central differences."""


class NotEquivariant(AssertionError):
    """Permuting the input did not permute the output the same way."""


def _summarize_errors(errors: Dict[str, float], tolerance: float, limit: int = 5) -> str:
    worst = sorted(errors.items(), key=lambda item: item[1], reverse=True)
    lines = [
        f"  {'FAIL' if err >= tolerance else 'ok  '} {name}: {err:.3e}"
        for name, err in worst[:limit]
    ]
    if len(worst) > limit:
        lines.append(f"  ... and {len(worst) - limit} more tensors")
    return "\n".join(lines)


def assert_gradients_match(
    loss_fn: Callable[[], AdTensor],
    tensors: Union[Sequence[AdTensor], Mapping[str, AdTensor]],
    tolerance: float = 1e-4,
    eps: float = 1e-4,
) -> Dict[str, float]:
    """
    Fail (``GradientMismatch``, an ``AssertionError``) when the worst
    relative error of any tensor reaches ``tolerance``. Returns the
    per-tensor errors otherwise. Tensors must be 64-bit.
    """
    errors = grad_check_tensors(loss_fn, tensors, eps)
    worst = max(errors.values()) if errors else 0.0
    if worst >= tolerance:
        raise GradientMismatch(
            f"max relative gradient error {worst:.3e} >= tolerance {tolerance:.0e}.\n"
            f"Worst tensors:\n"
            f"{_summarize_errors(errors, tolerance)}"
        )
    return errors


def assert_equivariant(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    permutation: Sequence[int],
    axis: int = -1,
    rtol: float = 1e-12,
) -> None:
    """
    Fail (``NotEquivariant``) unless ``fn(x[perm]) == fn(x)[perm]`` along
    ``axis``, to ``rtol`` relative to the output scale.
    """
    permutation = np.asarray(permutation)
    expected = np.take(fn(x), permutation, axis=axis)
    actual = fn(np.take(x, permutation, axis=axis))
    if actual.shape != expected.shape:
        raise NotEquivariant(f"output shapes differ: {actual.shape} vs {expected.shape}")
    scale = max(1.0, float(np.max(np.abs(expected)))) if expected.size else 1.0
    diff = float(np.max(np.abs(actual - expected))) if expected.size else 0.0
    if diff > rtol * scale:
        where = np.unravel_index(int(np.argmax(np.abs(actual - expected))), expected.shape)
        raise NotEquivariant(
            f"permuted output differs by {diff:.3e} (allowed {rtol * scale:.3e}).\n"
            f"  Permutation: {permutation.tolist()}\n"
            f"  Worst index: {tuple(int(i) for i in where)}"
        )
