"""
Training loop.

One tape per step: forward in train mode, cross-entropy, backward, one
Nesterov step, tape cleared. Batch order is a pure function of
``(seed, epoch)``; the last partial batch of an epoch is kept.

Run directory layout (when ``run_dir`` is given)::

    log.jsonl                one record per epoch
    checkpoints/last.sttf    after every epoch
    checkpoints/best.sttf    best eval top-1 (train accuracy without an
                             eval set); ties go to the later epoch
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.checkpoint import Checkpoint, save_checkpoint
from ..core.ops import softmax_cross_entropy
from ..core.tensor import Tape, precision_name
from ..data.skeleton import SkeletonSequence
from ..errors import ConfigError, LabelError, TrainingDivergedError
from ..model.config import ModelConfig
from ..model.network import SttFormer, forward
from .evaluate import batch_slices, evaluate, make_batch
from .optim import OptimizerState, TrainSchedule, lr_at, sgd_nesterov_step

logger = logging.getLogger("sttformer.training")

LOG_FILE = "log.jsonl"
CHECKPOINT_DIR = "checkpoints"


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    eval_acc: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class TrainResult:
    model: SttFormer
    last: Checkpoint
    best: Checkpoint
    best_epoch: int
    log: List[EpochRecord] = field(default_factory=list)


def batch_order(num_samples: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(num_samples)


def _check_dataset(cfg: ModelConfig, dataset: Sequence[SkeletonSequence]) -> None:
    if not dataset:
        raise ConfigError("training dataset is empty")
    if cfg.num_classes < 2:
        raise ConfigError(f"training needs at least two classes, num_classes={cfg.num_classes}")
    for seq in dataset:
        if not 0 <= seq.label < cfg.num_classes:
            raise LabelError(f"sample '{seq.name}' has label {seq.label}, outside [0, {cfg.num_classes})")


def _checkpoint(
    model: SttFormer,
    state: OptimizerState,
    record: EpochRecord,
    schedule: TrainSchedule,
    extra: Optional[Dict[str, Any]],
) -> Checkpoint:
    metadata = {
        **(extra or {}),
        "epoch": record.epoch,
        "train_acc": record.train_acc,
        "eval_acc": record.eval_acc,
        "precision": precision_name(model.params.classifier.weight.dtype),
        "schedule": schedule.to_dict(),
    }
    return model.to_checkpoint(extra_arrays=state.state_arrays(), metadata=metadata)


def train(
    cfg: ModelConfig,
    dataset: Sequence[SkeletonSequence],
    schedule: TrainSchedule,
    eval_dataset: Optional[Sequence[SkeletonSequence]] = None,
    run_dir: Optional[Union[str, Path]] = None,
    model: Optional[SttFormer] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> TrainResult:
    """Train ``cfg`` on ``dataset``; parameters are seeded from ``schedule.seed``.

    ``metadata`` (e.g. the data mode) is stored in every checkpoint.
    """
    _check_dataset(cfg, dataset)
    model = model or SttFormer.create(cfg, seed=schedule.seed)
    params = model.params
    named = params.named_parameters()
    state = OptimizerState(
        lr=schedule.base_lr, momentum=schedule.momentum, weight_decay=schedule.weight_decay
    )
    inputs, labels = make_batch(dataset, cfg)

    log_path = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        (run_dir / CHECKPOINT_DIR).mkdir(parents=True, exist_ok=True)
        log_path = run_dir / LOG_FILE
        log_path.write_text("", encoding="utf-8")

    log: List[EpochRecord] = []
    best: Optional[Checkpoint] = None
    best_epoch = -1
    best_score = -math.inf
    last: Optional[Checkpoint] = None

    for epoch in range(schedule.epochs):
        state.lr = lr_at(epoch, schedule)
        order = batch_order(len(dataset), schedule.seed, epoch)
        total_loss = 0.0
        correct = 0
        for step, part in enumerate(batch_slices(len(dataset), schedule.batch_size)):
            index = order[part]
            tape = Tape()
            with tape:
                logits = forward(inputs[index], params, cfg, training=True)
                loss = softmax_cross_entropy(logits, labels[index])
                value = loss.item()
                if not math.isfinite(value):
                    tape.clear()
                    raise TrainingDivergedError(epoch, step, value)
                params.zero_grad()
                tape.backward(loss)
            tape.clear()
            sgd_nesterov_step(named, {name: t.grad for name, t in named.items()}, state)
            total_loss += value * index.size
            correct += int(np.sum(np.argmax(logits.data, axis=1) == labels[index]))

        record = EpochRecord(
            epoch=epoch,
            lr=state.lr,
            train_loss=total_loss / len(dataset),
            train_acc=correct / len(dataset),
        )
        if eval_dataset:
            record.eval_acc = evaluate(model, eval_dataset, batch_size=schedule.batch_size).top1
        log.append(record)
        logger.info(
            "epoch %d lr=%.5g loss=%.4f train_acc=%.4f eval_acc=%s",
            epoch, record.lr, record.train_loss, record.train_acc,
            "-" if record.eval_acc is None else f"{record.eval_acc:.4f}",
        )
        if log_path is not None:
            with log_path.open("a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")

        last = _checkpoint(model, state, record, schedule, metadata)
        score = record.eval_acc if record.eval_acc is not None else record.train_acc
        if score >= best_score:
            best, best_epoch, best_score = last, epoch, score
        if run_dir is not None:
            save_checkpoint(last, run_dir / CHECKPOINT_DIR / "last.sttf")
            if best_epoch == epoch:
                save_checkpoint(best, run_dir / CHECKPOINT_DIR / "best.sttf")
        if on_epoch is not None:
            on_epoch(record)

    return TrainResult(model=model, last=last, best=best, best_epoch=best_epoch, log=log)
