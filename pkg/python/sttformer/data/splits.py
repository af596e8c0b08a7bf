"""Train/test split protocols for NTU-style metadata."""

from typing import List, Sequence, Tuple

from ..errors import ConfigError
from .skeleton import SkeletonSequence

# Cross-subject training performers (the first 20 cover the 60-class set).
XSUB_TRAIN_SUBJECTS = frozenset((
    1, 2, 4, 5, 8, 9, 13, 14, 15, 16, 17, 18, 19, 25, 27, 28, 31, 34, 35, 38,
    45, 46, 47, 49, 50, 52, 53, 54, 55, 56, 57, 58, 59, 70, 74, 78, 80, 81, 82,
    83, 84, 85, 86, 89, 91, 92, 93, 94, 95, 97, 98, 100, 103,
))
XVIEW_TRAIN_CAMERAS = frozenset((2, 3))

PROTOCOLS = ("xsub", "xview", "xset")


def is_training_sample(seq: SkeletonSequence, protocol: str) -> bool:
    if protocol == "xsub":
        return seq.subject_id in XSUB_TRAIN_SUBJECTS
    if protocol == "xview":
        return seq.camera_id in XVIEW_TRAIN_CAMERAS
    if protocol == "xset":
        return seq.setup_id % 2 == 0
    raise ConfigError(f"unknown split protocol '{protocol}'. Valid protocols: {', '.join(PROTOCOLS)}")


def split_dataset(
    sequences: Sequence[SkeletonSequence], protocol: str
) -> Tuple[List[SkeletonSequence], List[SkeletonSequence]]:
    """(train, test), each keeping the input order."""
    train: List[SkeletonSequence] = []
    test: List[SkeletonSequence] = []
    for seq in sequences:
        (train if is_training_sample(seq, protocol) else test).append(seq)
    return train, test
