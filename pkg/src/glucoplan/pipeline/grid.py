"""Resampling raw records onto the fixed 15-minute grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable

import numpy as np

from ..errors import EmptyInput
from .records import EVENT_CHANNELS, LEVEL_CHANNELS, NUMERIC_CHANNELS, RawRecord

DEFAULT_INTERVAL_MIN = 15


@dataclass
class SampleGrid:
    """Multichannel series aligned to a uniform grid in canonical units.

    Every channel has the same length; missing slots hold 0.0 with the
    corresponding missing_mask bit set, so there is never a NaN downstream.
    """

    patient_id: str
    start_time: datetime
    interval_minutes: int = DEFAULT_INTERVAL_MIN
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    missing_mask: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(next(iter(self.channels.values()))) if self.channels else 0

    def slot_time(self, index: int) -> datetime:
        return self.start_time + timedelta(minutes=index * self.interval_minutes)

    def validate(self) -> None:
        lengths = {ch: len(v) for ch, v in self.channels.items()}
        if len(set(lengths.values())) > 1:
            raise ValueError(f"unequal channel lengths: {lengths}")
        for ch, values in self.channels.items():
            if not np.all(np.isfinite(values)):
                raise ValueError(f"non-finite values in channel {ch}")


def _floor_to_interval(ts: datetime, interval_minutes: int) -> datetime:
    anchor = ts.replace(hour=0, minute=0, second=0, microsecond=0)
    slots = int((ts - anchor).total_seconds() // (interval_minutes * 60))
    return anchor + timedelta(minutes=slots * interval_minutes)


def resample_to_grid(
    records: Iterable[RawRecord],
    interval_minutes: int = DEFAULT_INTERVAL_MIN,
    patient_id: str = "unknown",
) -> SampleGrid:
    """Aggregate canonical records into per-slot channel arrays.

    Event channels (insulin, nutrients, drugs) are summed within a slot;
    glucose readings are averaged. Slots with no observation become 0.0
    with the missing bit set. Text records are ignored here; they feed the
    dietary-analysis path, not the numeric grid.
    """
    numeric = [r for r in records if not r.is_text()]
    if not numeric:
        raise EmptyInput("no numeric records to resample")

    numeric.sort(key=lambda r: r.timestamp)
    start = _floor_to_interval(numeric[0].timestamp, interval_minutes)
    span = numeric[-1].timestamp - start
    length = int(span.total_seconds() // (interval_minutes * 60)) + 1

    sums = {ch: np.zeros(length) for ch in NUMERIC_CHANNELS}
    counts = {ch: np.zeros(length, dtype=np.int64) for ch in NUMERIC_CHANNELS}
    for rec in numeric:
        slot = int((rec.timestamp - start).total_seconds() // (interval_minutes * 60))
        sums[rec.channel][slot] += float(rec.value)
        counts[rec.channel][slot] += 1

    channels: dict[str, np.ndarray] = {}
    missing: dict[str, np.ndarray] = {}
    for ch in NUMERIC_CHANNELS:
        observed = counts[ch] > 0
        values = sums[ch]
        if ch in LEVEL_CHANNELS:
            values = np.divide(values, counts[ch], out=np.zeros(length), where=observed)
        # EVENT_CHANNELS keep the plain sum; an unobserved slot is a true
        # zero dose but still flagged missing for provenance.
        assert ch in LEVEL_CHANNELS or ch in EVENT_CHANNELS
        channels[ch] = values
        missing[ch] = ~observed

    grid = SampleGrid(
        patient_id=patient_id,
        start_time=start,
        interval_minutes=interval_minutes,
        channels=channels,
        missing_mask=missing,
    )
    grid.validate()
    return grid
