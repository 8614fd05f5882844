"""Glucose forecasting for a candidate bolus plan."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from .errors import LengthMismatch, ModelNotLoaded, ShapeMismatch
from .horizon import HorizonRequest
from .model.config import FORECAST_TARGET
from .model.network import GlycemicModel


@dataclass
class ForecastRequest(HorizonRequest):
    """The candidate plan occupies the future bolus slots of the bundle."""

    candidate_doses_iu: Optional[np.ndarray] = None

    def doses(self, future_len: int) -> np.ndarray:
        if self.candidate_doses_iu is None:
            raise ShapeMismatch("forecast request carries no candidate plan")
        doses = np.asarray(self.candidate_doses_iu, dtype=float)
        if doses.shape != (future_len,):
            raise ShapeMismatch(
                f"candidate plan must have shape ({future_len},), got {doses.shape}"
            )
        return doses


@dataclass
class GlucoseTrace:
    """Predicted glucose (mg/dl) at 15-minute intervals."""

    values_mg_dl: np.ndarray
    created_at: datetime = field(default_factory=datetime.now)

    def __post_init__(self):
        self.values_mg_dl = np.asarray(self.values_mg_dl, dtype=float)
        if self.values_mg_dl.shape != (8,):
            raise ShapeMismatch(f"a trace holds exactly 8 values, got {self.values_mg_dl.shape}")
        if not np.all(np.isfinite(self.values_mg_dl)):
            raise ShapeMismatch("trace values must be finite")


def forecast(request: ForecastRequest, model: GlycemicModel) -> GlucoseTrace:
    """Predict the 8 future glucose values under the candidate plan."""
    if model is None:
        raise ModelNotLoaded("no glucose model loaded")
    cfg = model.config
    if cfg.target_channel != FORECAST_TARGET:
        raise ShapeMismatch(
            f"model decodes {cfg.target_channel!r}, expected {FORECAST_TARGET!r}"
        )
    doses = request.doses(cfg.future_len)
    batch = request.to_batch(cfg, future_bolus=doses, future_glucose=np.zeros(cfg.future_len))
    return GlucoseTrace(values_mg_dl=model.predict(batch)[0])


def _stack_traces(traces: Sequence) -> np.ndarray:
    rows = []
    for trace in traces:
        values = trace.values_mg_dl if isinstance(trace, GlucoseTrace) else np.asarray(trace, dtype=float)
        rows.append(values)
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise LengthMismatch(f"traces have mixed lengths: {sorted(lengths)}")
    return np.stack(rows)


def glucose_mae(predicted: Sequence, reference: Sequence) -> float:
    """Mean absolute forecast error (mg/dl) over every slot of every trace."""
    if len(predicted) != len(reference):
        raise LengthMismatch(
            f"{len(predicted)} predicted traces vs {len(reference)} reference traces"
        )
    if not len(predicted):
        raise LengthMismatch("no traces to compare")
    a = _stack_traces(predicted)
    b = _stack_traces(reference)
    if a.shape != b.shape:
        raise LengthMismatch(f"trace shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())
