"""Sliding-window segmentation of a grid into training clips."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from ..errors import GridTooShort
from .records import BASAL, BOLUS, GLUCOSE, NUMERIC_CHANNELS
from .grid import SampleGrid

DEFAULT_WINDOW = 32      # 8 hours of 15-min slots
DEFAULT_HISTORY = 24     # leaves 8 future slots = 2 hours
BASAL_HISTORY_SLOTS = 96  # prior 24 hours


@dataclass
class Clip:
    """One window of the grid: n history slots plus m-n future slots.

    ``values`` holds the original (pre-mask) series; the label masks mark
    the future slots whose bolus/glucose values are hidden from the model
    and kept as targets. ``basal_24h`` is the basal dose series for the 24
    hours ending at the decision point (the last history slot), left-padded
    with zeros when the grid does not reach back that far.
    """

    patient_id: str
    start_index: int
    start_time: datetime
    history_len: int
    values: dict[str, np.ndarray]
    missing: dict[str, np.ndarray]
    bolus_label_mask: np.ndarray
    glucose_label_mask: np.ndarray
    basal_24h: np.ndarray
    day_key: str

    @property
    def window(self) -> int:
        return len(self.values[GLUCOSE])

    @property
    def future_len(self) -> int:
        return self.window - self.history_len

    def labels(self, channel: str) -> np.ndarray:
        mask = self.bolus_label_mask if channel == BOLUS else self.glucose_label_mask
        return self.values[channel][mask]


def segment(
    grid: SampleGrid,
    window: int = DEFAULT_WINDOW,
    history_len: int = DEFAULT_HISTORY,
    stride: int = 1,
) -> list[Clip]:
    """Cut the grid into overlapping clips of ``window`` slots.

    Produces floor((L - window) / stride) + 1 clips. Raises GridTooShort
    when the grid cannot hold a single window.
    """
    if not (0 < history_len < window):
        raise ValueError(f"need 0 < history_len < window, got {history_len}/{window}")
    length = grid.length
    if length < window:
        raise GridTooShort(length, window)

    future_mask = np.zeros(window, dtype=bool)
    future_mask[history_len:] = True
    basal = grid.channels[BASAL]

    clips = []
    for start in range(0, length - window + 1, stride):
        decision = start + history_len
        lo = max(0, decision - BASAL_HISTORY_SLOTS)
        hist = basal[lo:decision]
        basal_24h = np.zeros(BASAL_HISTORY_SLOTS)
        if len(hist):
            basal_24h[-len(hist):] = hist
        start_time = grid.slot_time(start)
        clips.append(
            Clip(
                patient_id=grid.patient_id,
                start_index=start,
                start_time=start_time,
                history_len=history_len,
                values={ch: grid.channels[ch][start : start + window].copy()
                        for ch in NUMERIC_CHANNELS},
                missing={ch: grid.missing_mask[ch][start : start + window].copy()
                         for ch in NUMERIC_CHANNELS},
                bolus_label_mask=future_mask.copy(),
                glucose_label_mask=future_mask.copy(),
                basal_24h=basal_24h,
                day_key=f"{grid.patient_id}|{start_time.date().isoformat()}",
            )
        )
    return clips


def reassemble(clips: Sequence[Clip], length: int) -> dict[str, np.ndarray]:
    """Rebuild grid channels from overlapping clips (pre-mask values).

    Overlapping slots must agree exactly; used to verify that segmentation
    is lossless over every covered slot.
    """
    channels = {ch: np.full(length, np.nan) for ch in NUMERIC_CHANNELS}
    for clip in clips:
        sl = slice(clip.start_index, clip.start_index + clip.window)
        for ch in NUMERIC_CHANNELS:
            existing = channels[ch][sl]
            fresh = clip.values[ch]
            overlap = ~np.isnan(existing)
            if np.any(existing[overlap] != fresh[overlap]):
                raise ValueError(f"clips disagree on channel {ch}")
            channels[ch][sl] = fresh
    return channels
