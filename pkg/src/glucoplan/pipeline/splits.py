"""Deterministic train/val/test partitioning with patient-day grouping."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import TooFewClips
from .clips import Clip

RATIOS = (0.70, 0.15, 0.15)
MIN_CLIPS = 10


@dataclass
class DatasetSplit:
    train_clips: list[Clip]
    val_clips: list[Clip]
    test_clips: list[Clip]
    split_seed: int

    def counts(self) -> tuple[int, int, int]:
        return len(self.train_clips), len(self.val_clips), len(self.test_clips)


def _targets(total: int) -> list[int]:
    """70/15/15 by clip count; leftover clips go to val first, then test.

    10 clips -> 7/2/1. Exact multiples split exactly.
    """
    base = [int(total * r) for r in RATIOS]
    remainder = total - sum(base)
    for idx in (1, 2, 0, 1, 2, 0):
        if remainder == 0:
            break
        base[idx] += 1
        remainder -= 1
    return base


def split(clips: Sequence[Clip], seed: int) -> DatasetSplit:
    """Partition clips into 70/15/15, never splitting a patient-day.

    Overlapping windows from the same day share most of their slots, so a
    day that straddled train and test would leak labels. Whole patient-day
    groups are therefore assigned greedily (largest first, seeded shuffle
    as tie-break) to whichever part is furthest below its target. With
    single-clip days this lands exactly on the 70/15/15 targets.
    """
    clips = list(clips)
    if len(clips) < MIN_CLIPS:
        raise TooFewClips(f"need at least {MIN_CLIPS} clips, got {len(clips)}")

    groups: dict[str, list[Clip]] = {}
    for clip in clips:
        groups.setdefault(clip.day_key, []).append(clip)

    keys = sorted(groups)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(keys))
    # Largest groups placed first gives the tightest fit to the targets.
    ranked = sorted(range(len(keys)), key=lambda i: (-len(groups[keys[i]]), order[i]))

    targets = _targets(len(clips))
    parts: list[list[Clip]] = [[], [], []]
    for idx in ranked:
        group = groups[keys[idx]]
        deficits = [targets[p] - len(parts[p]) for p in range(3)]
        parts[deficits.index(max(deficits))].extend(group)

    return DatasetSplit(parts[0], parts[1], parts[2], split_seed=seed)
