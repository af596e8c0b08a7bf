"""
Evaluation: batched eval-mode logits and the metrics report.

Batches are fixed slices of the dataset, so logits do not depend on the
number of worker threads. Workers share one frozen parameter snapshot and
run without a tape.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.checkpoint import Checkpoint
from ..data.skeleton import SkeletonSequence, replay_pad
from ..errors import ConfigError, LabelError, ShapeError
from ..model.config import ModelConfig
from ..model.network import SttFormer

logger = logging.getLogger("sttformer.training")

THREADS_ENV = "STTF_THREADS"


def worker_threads() -> int:
    """Worker cap from ``STTF_THREADS`` (default ``min(4, cpu count)``)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, min(4, os.cpu_count() or 1))
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return threads


# ---------------------------------------------------------------------------
# Batching
# ---------------------------------------------------------------------------

def make_batch(sequences: Sequence[SkeletonSequence], cfg: ModelConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Stack replay-padded sequences into [B, 3, T0, V0, M] plus labels [B]."""
    frames = []
    for seq in sequences:
        if seq.num_joints != cfg.num_joints:
            raise ShapeError(
                f"sequence '{seq.name}' has {seq.num_joints} joints, model expects {cfg.num_joints}"
            )
        coords = replay_pad(seq, cfg.num_frames).coords
        persons = coords.shape[3]
        if persons < cfg.max_persons:
            coords = np.concatenate(
                [coords, np.zeros(coords.shape[:3] + (cfg.max_persons - persons,))], axis=3
            )
        frames.append(coords[..., :cfg.max_persons])
    labels = np.array([seq.label for seq in sequences], dtype=np.int64)
    return np.stack(frames), labels


def batch_slices(count: int, batch_size: int) -> List[slice]:
    return [slice(start, min(start + batch_size, count)) for start in range(0, count, batch_size)]


def predict_logits(
    model: SttFormer,
    sequences: Sequence[SkeletonSequence],
    batch_size: int = 64,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Eval-mode logits [N, num_classes] in dataset order."""
    if not sequences:
        return np.zeros((0, model.config.num_classes))
    threads = threads or worker_threads()
    slices = batch_slices(len(sequences), batch_size)

    def run(part: slice) -> np.ndarray:
        batch, _ = make_batch(sequences[part], model.config)
        return model.logits(batch)

    if threads == 1 or len(slices) == 1:
        parts = [run(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="sttf-eval") as pool:
            parts = list(pool.map(run, slices))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    """Top-1 accuracy, per-class accuracy (NaN for classes without samples),
    confusion matrix [true, predicted] and mean cross-entropy."""
    top1: float
    per_class: np.ndarray
    confusion: np.ndarray
    mean_loss: float
    num_samples: int

    @property
    def class_counts(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "top1": self.top1,
            "per_class": [None if math.isnan(a) else float(a) for a in self.per_class],
            "confusion": self.confusion.tolist(),
            "mean_loss": self.mean_loss,
            "num_samples": self.num_samples,
        }


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(labels.size), labels].mean())


def report_from_logits(logits: np.ndarray, labels: Sequence[int], num_classes: int) -> EvalReport:
    """Metrics for precomputed logits; argmax ties go to the lowest class index."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or logits.shape != (labels.size, num_classes):
        raise ShapeError(f"logits shape {logits.shape} does not match {labels.size} labels x {num_classes} classes")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    if labels.size == 0:
        return EvalReport(float("nan"), np.full(num_classes, np.nan), confusion, float("nan"), 0)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise LabelError(f"labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]")
    predictions = np.argmax(logits, axis=1)
    np.add.at(confusion, (labels, predictions), 1)
    counts = confusion.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(counts > 0, np.diag(confusion) / np.maximum(counts, 1), np.nan)
    return EvalReport(
        top1=float(np.mean(predictions == labels)),
        per_class=per_class,
        confusion=confusion,
        mean_loss=cross_entropy(logits, labels),
        num_samples=int(labels.size),
    )


def evaluate(
    model: Union[SttFormer, Checkpoint],
    sequences: Sequence[SkeletonSequence],
    batch_size: int = 64,
    threads: Optional[int] = None,
) -> EvalReport:
    if isinstance(model, Checkpoint):
        model = SttFormer.from_checkpoint(model)
    logits = predict_logits(model, sequences, batch_size, threads)
    labels = [seq.label for seq in sequences]
    report = report_from_logits(logits, labels, model.config.num_classes)
    logger.info("evaluated %d samples: top1=%.4f loss=%.4f", report.num_samples, report.top1, report.mean_loss)
    return report
