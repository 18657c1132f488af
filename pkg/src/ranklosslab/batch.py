"""Mini-batch data model for ranking samples.

A batch carries one scalar score, one ternary label, and one group id per
sample.  Labels are 1 (positive), 0 (negative), or -1 (ignored: the sample
is excluded from every loss and gradient).  Group ids tag which image or
sub-batch a sample came from so that batches can be aggregated without
losing that structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

VALID_LABELS = (-1, 0, 1)


@dataclass(frozen=True)
class SampleBatch:
    """Scores, ternary labels, and group ids for one mini-batch."""

    scores: np.ndarray
    labels: np.ndarray
    group_ids: np.ndarray | None = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if scores.ndim != 1 or labels.ndim != 1:
            raise ValueError("scores and labels must be one-dimensional")
        if scores.shape[0] != labels.shape[0]:
            raise ValueError(
                f"length mismatch: {scores.shape[0]} scores vs {labels.shape[0]} labels"
            )
        if labels.size and not np.isin(labels, VALID_LABELS).all():
            bad = np.unique(labels[~np.isin(labels, VALID_LABELS)])
            raise ValueError(f"labels must be in {{-1, 0, 1}}, found {bad.tolist()}")
        if self.group_ids is None:
            group_ids = np.zeros(scores.shape[0], dtype=np.int64)
        else:
            group_ids = np.asarray(self.group_ids, dtype=np.int64)
            if group_ids.shape != scores.shape:
                raise ValueError("group_ids must match scores in length")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "group_ids", group_ids)

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])

    def subset(self, index: np.ndarray) -> "SampleBatch":
        return SampleBatch(self.scores[index], self.labels[index], self.group_ids[index])


def partition(batch: SampleBatch) -> tuple[np.ndarray, np.ndarray]:
    """Split a batch into (positive, negative) sample index arrays.

    Samples labeled -1 land in neither set.  Both arrays are sorted and
    may be empty.
    """
    return (
        np.flatnonzero(batch.labels == 1),
        np.flatnonzero(batch.labels == 0),
    )


def aggregate_batches(batches: Sequence[SampleBatch] | Iterable[SampleBatch]) -> SampleBatch:
    """Concatenate per-image batches into one jointly-ranked batch.

    Scores from all inputs are pooled so a single ranking spans every
    group; this is what defuses the score-shift failure mode of ranking
    each image on its own scale.  Group ids of later batches are offset so
    distinct inputs never collide (a run of single-group inputs comes out
    tagged 0, 1, 2, ...).
    """
    batches = list(batches)
    if not batches:
        return SampleBatch(np.empty(0), np.empty(0, dtype=np.int64))
    scores = np.concatenate([b.scores for b in batches])
    labels = np.concatenate([b.labels for b in batches])
    gids = []
    offset = 0
    for b in batches:
        if b.n == 0:
            continue
        shifted = b.group_ids - b.group_ids.min() + offset
        gids.append(shifted)
        offset = int(shifted.max()) + 1
    group_ids = np.concatenate(gids) if gids else np.empty(0, dtype=np.int64)
    return SampleBatch(scores, labels, group_ids)
