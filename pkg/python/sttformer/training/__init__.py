"""Training, evaluation and multi-mode fusion."""

from .evaluate import EvalReport, evaluate, predict_logits, report_from_logits
from .fusion import FusionReport, fuse_modes, fused_scores, fusion_report
from .optim import OptimizerState, TrainSchedule, lr_at, sgd_nesterov_step
from .trainer import EpochRecord, TrainResult, train

__all__ = [
    "OptimizerState",
    "TrainSchedule",
    "sgd_nesterov_step",
    "lr_at",
    "train",
    "EpochRecord",
    "TrainResult",
    "EvalReport",
    "evaluate",
    "predict_logits",
    "report_from_logits",
    "fuse_modes",
    "fused_scores",
    "fusion_report",
    "FusionReport",
]
