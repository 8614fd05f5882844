"""Shared request plumbing for the two inference tasks.

Both tasks look at the same horizon: n history slots of every channel,
the prior 24 h of basal doses, the patient profile, and anticipated
future inputs (nutrients, drugs, projected basal) over the 8 future
slots. They differ only in which future series is given and which is
generated, so both request types build the same clip-shaped structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

import numpy as np

from .errors import ShapeMismatch
from .model.config import ModelConfig
from .model.features import Batch, clip_arrays, profile_vector
from .model.profile import PatientProfile
from .pipeline.clips import Clip
from .pipeline.records import (
    BASAL,
    BOLUS,
    CALORIES,
    CARB,
    DRUG,
    FAT,
    GLUCOSE,
    NUMERIC_CHANNELS,
    PROTEIN,
)

FUTURE_CHANNELS = (CARB, PROTEIN, FAT, CALORIES, DRUG, BASAL)


@dataclass
class HorizonRequest:
    """Inputs common to dose planning and glucose forecasting."""

    patient_id: str
    history: dict[str, np.ndarray]
    basal_24h: np.ndarray
    profile: Optional[PatientProfile] = None
    future_nutrients: dict[str, np.ndarray] = field(default_factory=dict)
    future_drugs: Optional[np.ndarray] = None
    projected_basal: Optional[np.ndarray] = None

    def _future(self, channel: str, future_len: int) -> np.ndarray:
        if channel in (CARB, PROTEIN, FAT, CALORIES):
            values = self.future_nutrients.get(channel)
        elif channel == DRUG:
            values = self.future_drugs
        elif channel == BASAL:
            values = self.projected_basal
        else:
            values = None
        if values is None:
            return np.zeros(future_len)
        values = np.asarray(values, dtype=float)
        if values.shape != (future_len,):
            raise ShapeMismatch(
                f"future {channel} must have shape ({future_len},), got {values.shape}"
            )
        return values

    def validate_history(self, history_len: int, basal_len: int) -> None:
        for ch in NUMERIC_CHANNELS:
            if ch not in self.history:
                raise ShapeMismatch(f"history is missing channel {ch!r}")
            arr = np.asarray(self.history[ch], dtype=float)
            if arr.shape != (history_len,):
                raise ShapeMismatch(
                    f"history channel {ch} must have shape ({history_len},), got {arr.shape}"
                )
        basal = np.asarray(self.basal_24h, dtype=float)
        if basal.shape != (basal_len,):
            raise ShapeMismatch(
                f"basal_24h must have shape ({basal_len},), got {basal.shape}"
            )

    def build_clip(
        self,
        config: ModelConfig,
        future_bolus: np.ndarray,
        future_glucose: np.ndarray,
    ) -> Clip:
        """Materialize a clip-shaped window for inference.

        The caller supplies the two label-channel futures: the anticipated
        glucose (target trace or zeros) and the bolus plan (candidate doses
        or zeros). Whichever one is the model's target gets masked out
        again during batch assembly.
        """
        n, m = config.history_len, config.window
        self.validate_history(n, config.basal_len)
        future_mask = np.zeros(m, dtype=bool)
        future_mask[n:] = True

        values = {}
        for ch in NUMERIC_CHANNELS:
            hist = np.asarray(self.history[ch], dtype=float)
            if ch == BOLUS:
                fut = np.asarray(future_bolus, dtype=float)
            elif ch == GLUCOSE:
                fut = np.asarray(future_glucose, dtype=float)
            else:
                fut = self._future(ch, config.future_len)
            values[ch] = np.concatenate([hist, fut])

        return Clip(
            patient_id=self.patient_id,
            start_index=0,
            start_time=datetime.now(),
            history_len=n,
            values=values,
            missing={ch: np.zeros(m, dtype=bool) for ch in NUMERIC_CHANNELS},
            bolus_label_mask=future_mask.copy(),
            glucose_label_mask=future_mask.copy(),
            basal_24h=np.asarray(self.basal_24h, dtype=float),
            day_key=f"{self.patient_id}|request",
        )

    def to_batch(
        self,
        config: ModelConfig,
        future_bolus: np.ndarray,
        future_glucose: np.ndarray,
    ) -> Batch:
        clip = self.build_clip(config, future_bolus, future_glucose)
        temporal, basal, feed, _ = clip_arrays(config, clip, teacher_forcing=False)
        pvec = profile_vector(config, self.profile)
        return Batch(
            temporal=temporal[None],
            basal=basal[None] if basal is not None else None,
            profile=pvec[None] if pvec is not None else None,
            feed=feed[None],
            labels=None,
        )
