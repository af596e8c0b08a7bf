"""
Multi-mode score fusion.

Scores of models trained on different data modes (joint, bone, motion, ...)
are averaged per sample, by default as raw logits (optionally as softmax
probabilities, optionally weighted), then reduced by argmax with ties going
to the lowest class index.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..core.ops import softmax
from ..errors import FusionError

AVERAGES = ("logits", "probs")


def fused_scores(
    logit_sets: Sequence[np.ndarray],
    weights: Optional[Sequence[float]] = None,
    average: str = "logits",
    sample_ids: Optional[Sequence[Sequence[str]]] = None,
) -> np.ndarray:
    """Weighted mean [N, num_classes] of the per-mode scores."""
    if average not in AVERAGES:
        raise FusionError(f"unknown average '{average}'. Valid values: {', '.join(AVERAGES)}")
    if not logit_sets:
        raise FusionError("fusion needs at least one logit set")
    sets = [np.asarray(s, dtype=np.float64) for s in logit_sets]
    reference = sets[0].shape
    if len(reference) != 2:
        raise FusionError(f"logit sets must be [N, num_classes], got shape {reference}")
    for i, scores in enumerate(sets[1:], 1):
        if scores.shape != reference:
            raise FusionError(f"logit set {i} has shape {scores.shape}, set 0 has {reference}")
    if sample_ids is not None:
        if len(sample_ids) != len(sets):
            raise FusionError(f"{len(sample_ids)} sample-id lists for {len(sets)} logit sets")
        for i, ids in enumerate(sample_ids[1:], 1):
            if list(ids) != list(sample_ids[0]):
                raise FusionError(f"logit set {i} lists its samples in a different order than set 0")

    if weights is None:
        weights = [1.0] * len(sets)
    if len(weights) != len(sets):
        raise FusionError(f"{len(weights)} weights for {len(sets)} logit sets")
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise FusionError(f"fusion weights must be non-negative with a positive sum, got {weights.tolist()}")

    if average == "probs":
        sets = [softmax(s, axis=1) for s in sets]
    total = np.zeros(reference)
    for w, scores in zip(weights, sets):
        total += w * scores
    return total / weights.sum()


def fuse_modes(
    logit_sets: Sequence[np.ndarray],
    weights: Optional[Sequence[float]] = None,
    average: str = "logits",
    sample_ids: Optional[Sequence[Sequence[str]]] = None,
) -> np.ndarray:
    """Fused class predictions [N]."""
    return np.argmax(fused_scores(logit_sets, weights, average, sample_ids), axis=1)


@dataclass
class FusionReport:
    """Accuracy per mode plus the fused accuracy (last row)."""
    rows: List[Dict[str, object]] = field(default_factory=list)

    @property
    def fused_accuracy(self) -> float:
        return float(self.rows[-1]["accuracy"])

    def to_dict(self) -> Dict[str, object]:
        return {"rows": list(self.rows)}


def fusion_report(
    mode_logits: Mapping[str, np.ndarray],
    labels: Sequence[int],
    weights: Optional[Sequence[float]] = None,
    average: str = "logits",
) -> FusionReport:
    labels = np.asarray(labels, dtype=np.int64)
    report = FusionReport()
    for mode, logits in mode_logits.items():
        logits = np.asarray(logits)
        if logits.shape[0] != labels.size:
            raise FusionError(f"mode '{mode}' has {logits.shape[0]} rows for {labels.size} labels")
        accuracy = float(np.mean(np.argmax(logits, axis=1) == labels)) if labels.size else float("nan")
        report.rows.append({"mode": mode, "accuracy": accuracy})
    fused = fuse_modes(list(mode_logits.values()), weights, average)
    accuracy = float(np.mean(fused == labels)) if labels.size else float("nan")
    report.rows.append({"mode": "fusion", "accuracy": accuracy})
    return report
