"""
Dense tensors with reverse-mode automatic differentiation.

An :class:`AdTensor` wraps a contiguous numpy array. Every operation executed
while a :class:`Tape` is active appends one :class:`Node` to it
(record-on-execute); :meth:`Tape.backward` replays the nodes in reverse
order and accumulates gradients into the inputs that require them. Outside a
tape the same operations run eagerly and record nothing.

Precision policy:
  - ``f32`` (default) for training,
  - ``f64`` for gradient checking and bit-exact determinism tests.

Threading:
  The active tape is thread-local. A tape belongs to one thread for one step
  and is never shared mid-step; independent evaluation workers each run
  without a tape (or with their own).
"""

import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigError, ShapeError

logger = logging.getLogger("sttformer.tensor")

ArrayLike = Union[np.ndarray, float, int, Sequence]

PRECISIONS = {"f32": np.float32, "f64": np.float64}

_default_dtype = np.float32
_local = threading.local()


# ---------------------------------------------------------------------------
# Precision
# ---------------------------------------------------------------------------

def set_precision(name: str) -> None:
    """Set the process-wide default dtype (``"f32"`` or ``"f64"``)."""
    global _default_dtype
    if name not in PRECISIONS:
        raise ConfigError(
            f"unknown precision '{name}'. Valid values: {', '.join(PRECISIONS)}"
        )
    _default_dtype = PRECISIONS[name]


def get_dtype() -> type:
    """The dtype new tensors are created with."""
    return _default_dtype


def precision_name(dtype=None) -> str:
    dtype = np.dtype(_default_dtype if dtype is None else dtype)
    return "f64" if dtype == np.float64 else "f32"


@contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switch the default precision."""
    previous = precision_name()
    set_precision(name)
    try:
        yield
    finally:
        set_precision(previous)


# ---------------------------------------------------------------------------
# Tensor
# ---------------------------------------------------------------------------

class AdTensor:
    """A numpy array that can take part in a differentiation tape."""

    __slots__ = ("data", "grad", "requires_grad", "node", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype=None,
    ):
        self.data = np.ascontiguousarray(np.asarray(data, dtype=_default_dtype if dtype is None else dtype))
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node: Optional["Node"] = None
        self.name = name

    @classmethod
    def from_array(cls, array: np.ndarray) -> "AdTensor":
        """Wrap an op result without casting it."""
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(array)
        out.grad = None
        out.requires_grad = False
        out.node = None
        out.name = None
        return out

    # -- shape ----------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    # -- values ---------------------------------------------------------

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "AdTensor":
        return AdTensor.from_array(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Back-propagate from this scalar through the tape that produced it."""
        if self.node is None:
            if self.data.size != 1:
                raise ShapeError(f"backward() needs a scalar, got shape {self.shape}")
            self.grad = np.ones_like(self.data)
            return
        self.node.tape.backward(self)

    # -- operator sugar -------------------------------------------------

    def __add__(self, other: "AdTensor") -> "AdTensor":
        from . import ops

        return ops.add(self, other)

    def __matmul__(self, other: "AdTensor") -> "AdTensor":
        from . import ops

        return ops.batched_matmul(self, other)

    def __mul__(self, factor: float) -> "AdTensor":
        from . import ops

        return ops.scale(self, factor)

    __rmul__ = __mul__

    def __neg__(self) -> "AdTensor":
        from . import ops

        return ops.scale(self, -1.0)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        grad = " grad" if self.requires_grad else ""
        return f"AdTensor(shape={self.shape}, dtype={self.dtype}{label}{grad})"


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass(eq=False)
class Node:
    """One recorded operation: inputs, output and the rule mapping the
    output gradient to one gradient (or ``None``) per input."""
    op: str
    inputs: Tuple[AdTensor, ...]
    output: AdTensor
    backward: BackwardFn
    tape: "Tape"


class Tape:
    """Ordered record of the operations of one forward pass.

    Usage::

        with Tape() as tape:
            loss = model_loss(batch)
            tape.backward(loss)
        tape.clear()
    """

    def __init__(self) -> None:
        self.nodes: List[Node] = []
        self._previous: Optional["Tape"] = None

    def __enter__(self) -> "Tape":
        self._previous = current_tape()
        _local.tape = self
        return self

    def __exit__(self, exc_type, exc_value, traceback) -> None:
        _local.tape = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        op: str,
        inputs: Tuple[AdTensor, ...],
        output: AdTensor,
        backward: BackwardFn,
    ) -> None:
        node = Node(op=op, inputs=inputs, output=output, backward=backward, tape=self)
        output.node = node
        self.nodes.append(node)

    def backward(self, loss: AdTensor) -> None:
        """Replay the tape in reverse, seeding ``d loss / d loss = 1``."""
        if loss.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            upstream = node.output.grad
            if upstream is None:
                continue
            grads = node.backward(upstream)
            for tensor, grad in zip(node.inputs, grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if grad.shape != tensor.shape:
                    grad = grad.reshape(tensor.shape)
                if tensor.grad is None:
                    tensor.grad = np.array(grad, dtype=tensor.dtype, copy=True)
                else:
                    tensor.grad += grad

    def clear(self) -> None:
        """Drop every node so nothing leaks into the next step."""
        for node in self.nodes:
            node.output.node = None
        self.nodes.clear()


def current_tape() -> Optional[Tape]:
    return getattr(_local, "tape", None)


@contextmanager
def no_grad() -> Iterator[None]:
    """Run ops eagerly without recording, even inside an active tape."""
    previous = current_tape()
    _local.tape = None
    try:
        yield
    finally:
        _local.tape = previous


def tensor(data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None) -> AdTensor:
    """Create a tensor in the current default precision."""
    return AdTensor(data, requires_grad=requires_grad, name=name)
