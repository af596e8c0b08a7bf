"""
Exception hierarchy for sttformer.

Every error the library raises derives from :class:`SttfError`, so callers
(and the CLI) can catch one base class. Shape and configuration errors also
derive from ``ValueError`` to keep them usable where a plain value error is
expected.
"""

from typing import Optional


class SttfError(Exception):
    """Base class for all sttformer errors."""


class ShapeError(SttfError, ValueError):
    """Tensor extents do not line up; the message names the offending axis."""


class DegenerateBatchError(ShapeError):
    """Batch statistics requested over fewer than two values per channel."""


class ConfigError(SttfError, ValueError):
    """Invalid configuration value or combination of values."""


class LabelError(SttfError, ValueError):
    """Class label outside ``[0, num_classes)``."""


class SkeletonParseError(SttfError):
    """Malformed line in a skeleton text file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SkeletonFormatError(SttfError):
    """Well-formed text that violates the dataset layout (joint count, header)."""


class NonFiniteGradientError(SttfError):
    """A gradient contains NaN or inf."""

    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"non-finite gradient for parameter '{parameter}'")


class TrainingDivergedError(SttfError):
    """The training loss became NaN or inf."""

    def __init__(self, epoch: int, step: int, loss: float):
        self.epoch = epoch
        self.step = step
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch}, step {step} (loss={loss})")


class CheckpointError(SttfError):
    """Unreadable checkpoint or checkpoint/config mismatch."""


class FusionError(SttfError, ValueError):
    """Logit sets passed to fusion do not describe the same samples."""


class LayerError(SttfError):
    """A failure inside one stacked layer, tagged with its index."""

    def __init__(self, layer: int, cause: Exception):
        self.layer = layer
        self.cause = cause
        super().__init__(f"layer {layer}: {cause}")
