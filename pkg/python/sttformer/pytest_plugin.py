"""
Pytest plugin: gradient and equivariance fixtures.

Auto-registered via the ``pytest11`` entry point when sttformer is
installed. The fixture switches the default precision to 64-bit for the
duration of the test and restores it afterwards.

Usage::

    def test_my_op(sttformer):
        x = sttformer.tensor(np.ones((2, 3)))
        sttformer.gradients_match(lambda: my_loss(x), [x])
"""

from typing import Iterator

import pytest


class SttformerTestHelpers:
    """Pre-bound access to :mod:`sttformer.testing` in 64-bit mode."""

    def __init__(self, tolerance: float = 1e-4, seed: int = 0):
        import numpy as np

        self.tolerance = tolerance
        self.rng = np.random.default_rng(seed)

    def tensor(self, data, requires_grad: bool = True, name=None):
        from sttformer.core.tensor import AdTensor

        return AdTensor(data, requires_grad=requires_grad, name=name, dtype="float64")

    def randn(self, *shape, name=None):
        return self.tensor(self.rng.standard_normal(shape), name=name)

    def gradients_match(self, loss_fn, tensors, tolerance=None, eps: float = 1e-4):
        from sttformer.testing import assert_gradients_match

        return assert_gradients_match(loss_fn, tensors, tolerance or self.tolerance, eps)

    def equivariant(self, fn, x, permutation, axis: int = -1, rtol: float = 1e-12):
        from sttformer.testing import assert_equivariant

        return assert_equivariant(fn, x, permutation, axis=axis, rtol=rtol)


@pytest.fixture
def sttformer() -> Iterator[SttformerTestHelpers]:
    """Gradient/equivariance helpers with the default precision set to f64."""
    from sttformer.core.tensor import precision

    with precision("f64"):
        yield SttformerTestHelpers()
