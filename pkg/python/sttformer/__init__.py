"""
sttformer: spatio-temporal tuple transformer for skeleton action recognition.

A self-contained numpy implementation: reverse-mode autodiff tensors, NTU
skeleton parsing and the ``.sttd`` interchange format, the tuple-attention
network, SGD/Nesterov training, evaluation and multi-mode score fusion.

Usage::

    from sttformer import ModelConfig, SttFormer, TrainSchedule, make_synthetic_dataset, train

    cfg = ModelConfig(n=3, num_layers=2, channels=(16, 16), num_classes=4, num_joints=8, num_frames=24)
    data = make_synthetic_dataset(4, 16, 24, 8, seed=0)
    result = train(cfg, data, TrainSchedule(epochs=20, milestones=(15,)))
"""

__version__ = "0.1.0"

from .core.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .core.tensor import AdTensor, Tape, no_grad, precision, set_precision
from .data.skeleton import SkeletonSequence, derive_mode, load_dataset_dir, read_skeleton_file
from .data.synthetic import make_synthetic_dataset
from .data.topology import SkeletonTopology
from .errors import (
    CheckpointError,
    ConfigError,
    FusionError,
    ShapeError,
    SkeletonFormatError,
    SkeletonParseError,
    SttfError,
)
from .model.config import ModelConfig
from .model.network import SttFormer, forward
from .training.evaluate import EvalReport, evaluate
from .training.fusion import fuse_modes
from .training.optim import TrainSchedule
from .training.trainer import train

__all__ = [
    "__version__",
    "AdTensor",
    "Tape",
    "no_grad",
    "precision",
    "set_precision",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "SkeletonSequence",
    "SkeletonTopology",
    "read_skeleton_file",
    "load_dataset_dir",
    "derive_mode",
    "make_synthetic_dataset",
    "ModelConfig",
    "SttFormer",
    "forward",
    "TrainSchedule",
    "train",
    "evaluate",
    "EvalReport",
    "fuse_modes",
    "SttfError",
    "ShapeError",
    "ConfigError",
    "SkeletonParseError",
    "SkeletonFormatError",
    "CheckpointError",
    "FusionError",
]
