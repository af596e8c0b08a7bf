"""
Differentiable operations over :class:`~sttformer.core.tensor.AdTensor`.

Each op computes its forward value with numpy, then (when a tape is active
and an input requires a gradient) records a closure that maps the output
gradient to the input gradients. Only the operations the network needs are
provided.

Shape alignment is explicit: ``add`` requires identical shapes and
``expand`` is the only broadcasting primitive. ``batched_matmul`` broadcasts
its leading batch axes and nothing else.

Convolution lowers to im2col + one matmul; kernels are small and
asymmetric (1x1, 1xk1, k2x1), so there is no FFT path.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DegenerateBatchError, LabelError, ShapeError
from .tensor import AdTensor, BackwardFn, current_tape

Pair = Tuple[int, int]


def _make(op: str, data: np.ndarray, inputs: Tuple[AdTensor, ...], backward: BackwardFn) -> AdTensor:
    out = AdTensor.from_array(data)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, inputs, out, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` over broadcast leading/size-1 axes."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_rank(op: str, x: AdTensor, rank: int, layout: str) -> None:
    if x.ndim != rank:
        raise ShapeError(f"{op}: expected rank-{rank} input {layout}, got shape {x.shape}")


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def _im2col(xp: np.ndarray, kh: int, kw: int, stride: Pair, out_hw: Pair) -> np.ndarray:
    """(B, C, Hp, Wp) -> (B, C*kh*kw, Ho*Wo) via a strided patch view."""
    b, c, _, _ = xp.shape
    sh, sw = stride
    ho, wo = out_hw
    sb, sc, shh, sww = xp.strides
    patches = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, kh, kw, ho, wo),
        strides=(sb, sc, shh, sww, sh * shh, sw * sww),
        writeable=False,
    )
    return patches.reshape(b, c * kh * kw, ho * wo)


def _col2im(cols: np.ndarray, padded_shape: Tuple[int, ...], kh: int, kw: int,
            stride: Pair, out_hw: Pair) -> np.ndarray:
    """Scatter-add columns back onto the padded image (adjoint of _im2col)."""
    b, c, hp, wp = padded_shape
    sh, sw = stride
    ho, wo = out_hw
    image = np.zeros(padded_shape, dtype=cols.dtype)
    cols = cols.reshape(b, c, kh, kw, ho, wo)
    for i in range(kh):
        for j in range(kw):
            image[:, :, i:i + sh * ho:sh, j:j + sw * wo:sw] += cols[:, :, i, j]
    return image


def conv2d(
    x: AdTensor,
    weight: AdTensor,
    bias: Optional[AdTensor] = None,
    stride: Pair = (1, 1),
    padding: Pair = (0, 0),
) -> AdTensor:
    """2-D cross-correlation: [B,Cin,H,W] * [Cout,Cin,kh,kw] -> [B,Cout,H',W'].

    ``H' = floor((H + 2*pad_h - kh) / stride_h) + 1`` (same for W).
    """
    _require_rank("conv2d", x, 4, "[B,Cin,H,W]")
    _require_rank("conv2d", weight, 4, "[Cout,Cin,kh,kw]")
    b, cin, h, w = x.shape
    cout, wcin, kh, kw = weight.shape
    ph, pw = padding
    sh, sw = stride
    if wcin != cin:
        raise ShapeError(f"conv2d: channel axis mismatch, input has Cin={cin} but weight expects {wcin}")
    if kh > h + 2 * ph:
        raise ShapeError(f"conv2d: kernel height axis kh={kh} exceeds padded height {h + 2 * ph}")
    if kw > w + 2 * pw:
        raise ShapeError(f"conv2d: kernel width axis kw={kw} exceeds padded width {w + 2 * pw}")
    if sh < 1 or sw < 1:
        raise ShapeError(f"conv2d: stride must be positive, got {stride}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d: bias axis must have extent Cout={cout}, got shape {bias.shape}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x.data
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1
    cols = _im2col(xp, kh, kw, stride, (ho, wo))
    wmat = weight.data.reshape(cout, cin * kh * kw)
    out = np.matmul(wmat, cols)
    if bias is not None:
        out += bias.data[None, :, None]
    out = out.reshape(b, cout, ho, wo)

    def backward(grad: np.ndarray):
        g = grad.reshape(b, cout, ho * wo)
        gw = np.tensordot(g, cols, axes=([0, 2], [0, 2])).reshape(weight.shape)
        gx = None
        if x.requires_grad:
            gcols = np.matmul(wmat.T, g)
            gxp = _col2im(gcols, xp.shape, kh, kw, stride, (ho, wo))
            gx = gxp[:, :, ph:ph + h, pw:pw + w]
        gb = g.sum(axis=(0, 2)) if bias is not None else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return _make("conv2d", out, inputs, backward)


# ---------------------------------------------------------------------------
# Normalization and activations
# ---------------------------------------------------------------------------

@dataclass
class RunningStats:
    """Per-channel running mean/variance of a batch norm (not trainable)."""
    mean: np.ndarray
    var: np.ndarray

    @classmethod
    def fresh(cls, channels: int, dtype=None) -> "RunningStats":
        dtype = np.float32 if dtype is None else dtype
        return cls(mean=np.zeros(channels, dtype=dtype), var=np.ones(channels, dtype=dtype))


def batch_norm(
    x: AdTensor,
    gamma: AdTensor,
    beta: AdTensor,
    running: RunningStats,
    training: bool,
    eps: float = 1e-5,
    momentum: float = 0.1,
) -> AdTensor:
    """Per-channel normalization over (B, H, W).

    Train mode uses batch statistics and updates ``running`` in place
    (unbiased variance); eval mode uses ``running`` and mutates nothing.
    """
    _require_rank("batch_norm", x, 4, "[B,C,H,W]")
    b, c, h, w = x.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(
            f"batch_norm: channel axis has C={c} but gamma/beta have shapes {gamma.shape}/{beta.shape}"
        )
    axes = (0, 2, 3)
    count = b * h * w
    g4 = gamma.data[None, :, None, None]
    b4 = beta.data[None, :, None, None]

    if training:
        if count < 2:
            raise DegenerateBatchError(
                f"batch_norm: train mode needs B*H*W >= 2 values per channel, got {count}"
            )
        mean = x.data.mean(axis=axes)
        centered = x.data - mean[None, :, None, None]
        var = (centered * centered).mean(axis=axes)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = centered * inv_std[None, :, None, None]
        running.mean[...] = (1.0 - momentum) * running.mean + momentum * mean
        running.var[...] = (1.0 - momentum) * running.var + momentum * var * (count / (count - 1))
    else:
        inv_std = 1.0 / np.sqrt(running.var.astype(x.dtype) + eps)
        x_hat = (x.data - running.mean.astype(x.dtype)[None, :, None, None]) * inv_std[None, :, None, None]

    out = g4 * x_hat + b4

    def backward(grad: np.ndarray):
        g_gamma = (grad * x_hat).sum(axis=axes)
        g_beta = grad.sum(axis=axes)
        g_hat = grad * g4
        if training:
            gx = (inv_std[None, :, None, None] / count) * (
                count * g_hat
                - g_hat.sum(axis=axes)[None, :, None, None]
                - x_hat * (g_hat * x_hat).sum(axis=axes)[None, :, None, None]
            )
        else:
            gx = g_hat * inv_std[None, :, None, None]
        return gx, g_gamma, g_beta

    return _make("batch_norm", out.astype(x.dtype, copy=False), (x, gamma, beta), backward)


def leaky_relu(x: AdTensor, slope: float) -> AdTensor:
    """``max(x, slope*x)``; the subgradient at 0 is 1 (positive branch)."""
    positive = x.data >= 0
    out = np.where(positive, x.data, slope * x.data).astype(x.dtype, copy=False)

    def backward(grad: np.ndarray):
        return (grad * np.where(positive, 1.0, slope).astype(grad.dtype),)

    return _make("leaky_relu", out, (x,), backward)


def tanh(x: AdTensor) -> AdTensor:
    out = np.tanh(x.data)

    def backward(grad: np.ndarray):
        return (grad * (1.0 - out * out),)

    return _make("tanh", out, (x,), backward)


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------

def batched_matmul(a: AdTensor, b: AdTensor) -> AdTensor:
    """[..., M, K] @ [..., K, N] -> [..., M, N]; leading axes broadcast."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"batched_matmul: operands need rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"batched_matmul: inner axis mismatch, K={a.shape[-1]} (left) vs K={b.shape[-2]} (right)"
        )
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(
            f"batched_matmul: batch axes {a.shape[:-2]} and {b.shape[:-2]} do not broadcast"
        ) from None
    out = np.matmul(a.data, b.data)

    def backward(grad: np.ndarray):
        ga = _unbroadcast(np.matmul(grad, np.swapaxes(b.data, -1, -2)), a.shape) if a.requires_grad else None
        gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), grad), b.shape) if b.requires_grad else None
        return ga, gb

    return _make("batched_matmul", out, (a, b), backward)


def linear(x: AdTensor, weight: AdTensor, bias: Optional[AdTensor] = None) -> AdTensor:
    """Fully-connected layer: [B,in] -> [B,out] with weight [out,in]."""
    _require_rank("linear", x, 2, "[B,in]")
    if weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise ShapeError(
            f"linear: feature axis mismatch, input has {x.shape[1]} features, weight shape {weight.shape}"
        )
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeError(f"linear: bias axis must have extent {weight.shape[0]}, got {bias.shape}")
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def backward(grad: np.ndarray):
        gx = grad @ weight.data
        gw = grad.T @ x.data
        if bias is None:
            return gx, gw
        return gx, gw, grad.sum(axis=0)

    inputs = (x, weight, bias) if bias is not None else (x, weight)
    return _make("linear", out, inputs, backward)


# ---------------------------------------------------------------------------
# Structural ops
# ---------------------------------------------------------------------------

def reshape(x: AdTensor, shape: Sequence[int]) -> AdTensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape, dtype=np.int64)) != x.size:
        raise ShapeError(f"reshape: cannot view {x.size} elements of shape {x.shape} as {shape}")
    out = x.data.reshape(shape)
    source = x.shape

    def backward(grad: np.ndarray):
        return (grad.reshape(source),)

    return _make("reshape", out, (x,), backward)


def transpose(x: AdTensor, axes: Sequence[int]) -> AdTensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(x.ndim)):
        raise ShapeError(f"transpose: {axes} is not a permutation of the {x.ndim} axes of {x.shape}")
    inverse = tuple(int(i) for i in np.argsort(axes))
    out = np.transpose(x.data, axes)

    def backward(grad: np.ndarray):
        return (np.transpose(grad, inverse),)

    return _make("transpose", out, (x,), backward)


def concat(tensors: Sequence[AdTensor], axis: int) -> AdTensor:
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat: needs at least one tensor")
    first = tensors[0]
    axis = axis % first.ndim
    for t in tensors[1:]:
        if t.ndim != first.ndim:
            raise ShapeError(f"concat: rank mismatch, {first.shape} vs {t.shape}")
        for ax in range(first.ndim):
            if ax != axis and t.shape[ax] != first.shape[ax]:
                raise ShapeError(f"concat: axis {ax} mismatch, {first.shape} vs {t.shape}")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad: np.ndarray):
        return tuple(np.split(grad, offsets, axis=axis))

    return _make("concat", out, tensors, backward)


def slice_axis(x: AdTensor, start: int, stop: int, axis: int) -> AdTensor:
    """``x[..., start:stop, ...]`` along ``axis``."""
    axis = axis % x.ndim
    if not 0 <= start < stop <= x.shape[axis]:
        raise ShapeError(f"slice_axis: [{start}:{stop}] out of range for axis {axis} of {x.shape}")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = x.data[index]

    def backward(grad: np.ndarray):
        full = np.zeros(x.shape, dtype=grad.dtype)
        full[index] = grad
        return (full,)

    return _make("slice_axis", out, (x,), backward)


def pad_edge(x: AdTensor, before: int, after: int, axis: int) -> AdTensor:
    """Repeat the first/last slice along ``axis`` ``before``/``after`` times."""
    axis = axis % x.ndim
    if before < 0 or after < 0:
        raise ShapeError(f"pad_edge: negative padding ({before}, {after})")
    widths = [(0, 0)] * x.ndim
    widths[axis] = (before, after)
    out = np.pad(x.data, widths, mode="edge")
    extent = x.shape[axis]

    def backward(grad: np.ndarray):
        inner = np.take(grad, np.arange(before, before + extent), axis=axis).copy()
        head = [slice(None)] * x.ndim
        head[axis] = slice(0, 1)
        tail = [slice(None)] * x.ndim
        tail[axis] = slice(extent - 1, extent)
        inner[tuple(head)] += np.take(grad, np.arange(before), axis=axis).sum(axis=axis, keepdims=True)
        inner[tuple(tail)] += np.take(grad, np.arange(before + extent, before + extent + after),
                                      axis=axis).sum(axis=axis, keepdims=True)
        return (inner,)

    return _make("pad_edge", out, (x,), backward)


def expand(x: AdTensor, shape: Sequence[int]) -> AdTensor:
    """Broadcast size-1 axes of ``x`` to ``shape`` (ranks must match)."""
    shape = tuple(shape)
    if x.ndim != len(shape):
        raise ShapeError(f"expand: rank mismatch, {x.shape} vs target {shape}")
    for axis, (have, want) in enumerate(zip(x.shape, shape)):
        if have != want and have != 1:
            raise ShapeError(f"expand: axis {axis} has extent {have}, cannot expand to {want}")
    out = np.broadcast_to(x.data, shape)
    source = x.shape

    def backward(grad: np.ndarray):
        return (_unbroadcast(grad, source),)

    return _make("expand", out, (x,), backward)


def add(a: AdTensor, b: AdTensor) -> AdTensor:
    if a.shape != b.shape:
        for axis, (left, right) in enumerate(zip(a.shape, b.shape)):
            if left != right:
                raise ShapeError(f"add: axis {axis} mismatch, {a.shape} vs {b.shape}")
        raise ShapeError(f"add: rank mismatch, {a.shape} vs {b.shape}")
    out = a.data + b.data

    def backward(grad: np.ndarray):
        return grad, grad

    return _make("add", out, (a, b), backward)


def scale(x: AdTensor, factor: float) -> AdTensor:
    out = x.data * x.dtype.type(factor)

    def backward(grad: np.ndarray):
        return (grad * grad.dtype.type(factor),)

    return _make("scale", out, (x,), backward)


def global_avg_pool(x: AdTensor) -> AdTensor:
    """[B,C,H,W] -> [B,C], mean over H and W."""
    _require_rank("global_avg_pool", x, 4, "[B,C,H,W]")
    area = x.shape[2] * x.shape[3]
    out = x.data.mean(axis=(2, 3))
    source = x.shape

    def backward(grad: np.ndarray):
        return (np.broadcast_to(grad[:, :, None, None] / area, source).copy(),)

    return _make("global_avg_pool", out, (x,), backward)


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (plain numpy, no tape)."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def softmax_cross_entropy(logits: AdTensor, labels: Sequence[int]) -> AdTensor:
    """Mean cross entropy of ``logits`` [B,K] against integer ``labels``.

    Returns a scalar; d loss / d logits = (softmax - onehot) / B.
    """
    _require_rank("softmax_cross_entropy", logits, 2, "[B,num_classes]")
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    batch, classes = logits.shape
    if labels.shape[0] != batch:
        raise ShapeError(f"softmax_cross_entropy: batch axis has {batch} rows but {labels.shape[0]} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        bad = labels[(labels < 0) | (labels >= classes)][0]
        raise LabelError(f"label {bad} out of range for {classes} classes")
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(batch)
    loss = -log_probs[rows, labels].mean()

    def backward(grad: np.ndarray):
        g = np.exp(log_probs)
        g[rows, labels] -= 1.0
        return (g * (grad.reshape(()) / batch),)

    return _make("softmax_cross_entropy", np.asarray(loss, dtype=logits.dtype), (logits,), backward)


def leaky_margin(nodes: List) -> float:
    """Smallest |input| over the leaky-ReLU nodes of a tape (inf if none).

    Finite differences straddling the kink at 0 are not meaningful, so
    gradient checks choose points where this margin exceeds the step.
    """
    margins = [float(np.min(np.abs(n.inputs[0].data))) for n in nodes if n.op == "leaky_relu"]
    return min(margins) if margins else float("inf")
