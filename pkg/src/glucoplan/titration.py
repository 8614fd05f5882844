"""Bolus planning: 8 doses at 15-minute intervals toward a target trace."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence, Union

import numpy as np

from .errors import LengthMismatch, ModelNotLoaded, ShapeMismatch
from .horizon import HorizonRequest
from .model.config import TITRATION_TARGET
from .model.network import GlycemicModel
from .pipeline.records import BOLUS

logger = logging.getLogger(__name__)

STATUS_UNCHECKED = "unchecked"
STATUS_SAFE = "safe"
STATUS_FLAGGED = "flagged"

DEFAULT_MAX_BOLUS_IU = 25.0
TARGET_SANITY_MG_DL = (40.0, 400.0)
DOSE_DISPLAY_DECIMALS = 2  # emitted doses round to 0.01 IU for display only


@dataclass
class TitrationRequest(HorizonRequest):
    """HorizonRequest plus the glucose trace the patient wants to reach.

    A scalar target is held constant over all 8 future slots.
    """

    target_glucose: Union[float, np.ndarray] = 120.0

    def target_trace(self, future_len: int) -> np.ndarray:
        trace = np.asarray(self.target_glucose, dtype=float)
        if trace.ndim == 0:
            trace = np.full(future_len, float(trace))
        if trace.shape != (future_len,):
            raise ShapeMismatch(
                f"target trace must be scalar or shape ({future_len},), got {trace.shape}"
            )
        lo, hi = TARGET_SANITY_MG_DL
        if np.any(trace <= lo) or np.any(trace >= hi):
            raise ShapeMismatch(
                f"target glucose outside sanity bounds ({lo}, {hi}) mg/dl: {trace}"
            )
        return trace


@dataclass
class InsulinPlan:
    """8 bolus doses (IU) covering the next two hours.

    Only the guard loop may set safety_status to "safe"; plans come out of
    the planner unchecked.
    """

    doses_iu: np.ndarray
    created_at: datetime = field(default_factory=datetime.now)
    safety_status: str = STATUS_UNCHECKED
    retitration_count: int = 0

    def __post_init__(self):
        self.doses_iu = np.asarray(self.doses_iu, dtype=float)
        if self.doses_iu.shape != (8,):
            raise ShapeMismatch(f"a plan holds exactly 8 doses, got {self.doses_iu.shape}")
        if np.any(self.doses_iu < 0) or not np.all(np.isfinite(self.doses_iu)):
            raise ShapeMismatch("doses must be finite and non-negative")

    def display_doses(self) -> list[float]:
        return [round(float(d), DOSE_DISPLAY_DECIMALS) for d in self.doses_iu]

    def with_doses(self, doses: np.ndarray) -> "InsulinPlan":
        return InsulinPlan(
            doses_iu=doses,
            created_at=self.created_at,
            safety_status=STATUS_UNCHECKED,
            retitration_count=self.retitration_count,
        )


def recommend(
    request: TitrationRequest,
    model: GlycemicModel,
    max_bolus_iu: float = DEFAULT_MAX_BOLUS_IU,
    audit_log: Optional[list] = None,
) -> InsulinPlan:
    """Generate an unchecked 8-dose plan for the request.

    The target trace fills the future glucose slots; future bolus slots are
    the masked placeholders the decoder fills in. Doses are capped at the
    per-slot guard rail (default 25 IU), which is an engineering limit, not
    a clinical one.
    """
    if model is None:
        raise ModelNotLoaded("no titration model loaded")
    cfg = model.config
    if cfg.target_channel != TITRATION_TARGET:
        raise ShapeMismatch(
            f"model decodes {cfg.target_channel!r}, expected {TITRATION_TARGET!r}"
        )
    target = request.target_trace(cfg.future_len)
    batch = request.to_batch(cfg, future_bolus=np.zeros(cfg.future_len), future_glucose=target)
    doses = model.predict(batch)[0]
    capped = np.minimum(doses, max_bolus_iu)
    if np.any(doses > max_bolus_iu):
        logger.warning(
            "patient %s: %d dose(s) capped at %.1f IU",
            request.patient_id, int((doses > max_bolus_iu).sum()), max_bolus_iu,
        )
    plan = InsulinPlan(doses_iu=capped)
    if audit_log is not None:
        audit_log.append(
            {
                "event": "recommend",
                "patient_id": request.patient_id,
                "target_glucose_mg_dl": [float(v) for v in target],
                "doses_iu": [float(d) for d in plan.doses_iu],
                "created_at": plan.created_at.isoformat(),
            }
        )
    return plan


def _stack_doses(plans: Sequence) -> np.ndarray:
    rows = []
    for plan in plans:
        doses = plan.doses_iu if isinstance(plan, InsulinPlan) else np.asarray(plan, dtype=float)
        rows.append(doses)
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise LengthMismatch(f"plans have mixed lengths: {sorted(lengths)}")
    return np.stack(rows)


def titration_mae(predicted: Sequence, reference: Sequence) -> float:
    """Mean absolute dose error (IU) over every slot of every plan."""
    if len(predicted) != len(reference):
        raise LengthMismatch(
            f"{len(predicted)} predicted plans vs {len(reference)} reference plans"
        )
    if not len(predicted):
        raise LengthMismatch("no plans to compare")
    a = _stack_doses(predicted)
    b = _stack_doses(reference)
    if a.shape != b.shape:
        raise LengthMismatch(f"plan shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())
