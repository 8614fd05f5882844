"""The guard loop: no plan is released without a clean forecast.

Each candidate plan is forecast, the trace is checked against the 70/180
mg/dl bounds, and risky plans go back for re-titration (a language model
acting as a dosing reviewer, or optionally the titration model itself with
an adjusted target). The loop is bounded: after max_iters re-titrations
the least-risky candidate is returned explicitly flagged, never silently
passed off as safe.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BackendUnavailable, IncompleteContext, MalformedResponse
from .forecast import GlucoseTrace
from .nutrition.backends import LlmBackend
from .titration import (
    DEFAULT_MAX_BOLUS_IU,
    STATUS_FLAGGED,
    STATUS_SAFE,
    InsulinPlan,
)

logger = logging.getLogger(__name__)

HYPO_MG_DL = 70.0
HYPER_MG_DL = 180.0
DEFAULT_MAX_ITERS = 5

KIND_HYPO = "hypo"
KIND_HYPER = "hyper"


@dataclass(frozen=True)
class RiskEvent:
    slot: int
    kind: str
    value_mg_dl: float


@dataclass
class RiskAssessment:
    events: list[RiskEvent]

    @property
    def is_safe(self) -> bool:
        return not self.events

    def to_dict(self) -> dict:
        return {
            "is_safe": self.is_safe,
            "events": [
                {"slot": e.slot, "kind": e.kind, "value_mg_dl": e.value_mg_dl}
                for e in self.events
            ],
        }


@dataclass
class RiskBounds:
    """Strict inequalities per the published wording: exactly 70 and exactly
    180 mg/dl are safe. Clinical reviewers can flip to inclusive bounds."""

    hypo_mg_dl: float = HYPO_MG_DL
    hyper_mg_dl: float = HYPER_MG_DL
    inclusive: bool = False


def detect_risk(trace: GlucoseTrace, bounds: Optional[RiskBounds] = None) -> RiskAssessment:
    """Classify every slot of the trace against the hypo/hyper bounds."""
    bounds = bounds or RiskBounds()
    events = []
    for slot, value in enumerate(trace.values_mg_dl):
        value = float(value)
        low = value <= bounds.hypo_mg_dl if bounds.inclusive else value < bounds.hypo_mg_dl
        high = value >= bounds.hyper_mg_dl if bounds.inclusive else value > bounds.hyper_mg_dl
        if low:
            events.append(RiskEvent(slot, KIND_HYPO, value))
        elif high:
            events.append(RiskEvent(slot, KIND_HYPER, value))
    return RiskAssessment(events=events)


@dataclass
class RetitrationContext:
    """Everything the dosing reviewer needs to see before revising."""

    current_glucose_mg_dl: Sequence[float]
    recent_meals: str
    candidate: InsulinPlan
    predicted_trace: Optional[GlucoseTrace]
    risk: Optional[RiskAssessment]

    def validate(self) -> None:
        missing = []
        if self.current_glucose_mg_dl is None or not len(self.current_glucose_mg_dl):
            missing.append("current_glucose_mg_dl")
        if not self.recent_meals or not self.recent_meals.strip():
            missing.append("recent_meals")
        if self.candidate is None:
            missing.append("candidate")
        if self.predicted_trace is None:
            missing.append("predicted_trace")
        if self.risk is None:
            missing.append("risk")
        if missing:
            raise IncompleteContext(f"re-titration context missing: {missing}")


_HYPER_GUIDANCE = (
    "Increased dosages may be necessary to manage predicted hyperglycemia "
    f"(above {HYPER_MG_DL:g} mg/dl)."
)
_HYPO_GUIDANCE = (
    "Reduced dosages are required where hypoglycemia is predicted "
    f"(below {HYPO_MG_DL:g} mg/dl); hypoglycemia is the more dangerous direction."
)


def build_retitration_prompt(ctx: RetitrationContext,
                             max_bolus_iu: float = DEFAULT_MAX_BOLUS_IU) -> str:
    """Compose the dosing-review prompt from a complete context."""
    ctx.validate()
    glucose = ", ".join(f"{v:.1f}" for v in ctx.current_glucose_mg_dl)
    doses = ", ".join(f"{d:.2f}" for d in ctx.candidate.doses_iu)
    trace = ", ".join(f"{v:.1f}" for v in ctx.predicted_trace.values_mg_dl)
    if ctx.risk.is_safe:
        events = "none"
    else:
        events = "; ".join(
            f"slot {e.slot + 1}: predicted {e.value_mg_dl:.1f} mg/dl ({e.kind})"
            for e in ctx.risk.events
        )
    return "\n".join(
        [
            "You are a diabetes specialist reviewing a proposed insulin plan.",
            "A glucose forecast flagged safety risks in the plan below; revise the",
            "8 bolus doses (IU, one per 15-minute slot over the next 2 hours) to",
            "remove the risks while still covering the meal.",
            _HYPER_GUIDANCE,
            _HYPO_GUIDANCE,
            f"Keep every dose within 0 to {max_bolus_iu:g} IU.",
            "",
            f"Recent glucose readings (mg/dl, oldest first): {glucose}",
            f"Recent dietary intake: {ctx.recent_meals}",
            f"Proposed doses (IU): {doses}",
            f"Predicted glucose under this plan (mg/dl): {trace}",
            f"Detected risk events: {events}",
            "",
            "Answer with a single line in exactly this form:",
            "doses_iu: d1, d2, d3, d4, d5, d6, d7, d8",
        ]
    )


_DOSES_LINE = re.compile(r"doses_iu\s*[:=]\s*\[?([^\]\n]+)", re.IGNORECASE)


def parse_dose_response(response: str, max_bolus_iu: float) -> np.ndarray:
    """Extract the revised 8 doses; out-of-range values are clipped and logged."""
    match = _DOSES_LINE.search(response or "")
    if not match:
        raise MalformedResponse("no doses_iu line in re-titration response")
    try:
        values = [float(v) for v in re.split(r"[,;\s]+", match.group(1).strip()) if v]
    except ValueError as exc:
        raise MalformedResponse(f"non-numeric dose: {exc}") from exc
    if len(values) != 8:
        raise MalformedResponse(f"expected 8 doses, got {len(values)}")
    doses = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(doses)):
        raise MalformedResponse("non-finite dose in response")
    clipped = np.clip(doses, 0.0, max_bolus_iu)
    if np.any(clipped != doses):
        logger.warning("re-titration doses outside [0, %.1f] IU were clipped", max_bolus_iu)
    return clipped


@dataclass
class GuardIteration:
    iteration: int
    doses_iu: list[float]
    trace_mg_dl: list[float]
    events: list[dict]
    prompt_sha256: str = ""
    response_sha256: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "doses_iu": self.doses_iu,
            "trace_mg_dl": self.trace_mg_dl,
            "events": self.events,
            "prompt_sha256": self.prompt_sha256,
            "response_sha256": self.response_sha256,
            "note": self.note,
        }


class GuardAudit:
    """Append-only record of every guard iteration; optionally mirrored to
    a JSONL file so the trail survives the process."""

    def __init__(self, path: Optional[str | Path] = None):
        self.iterations: list[GuardIteration] = []
        self.path = Path(path) if path else None

    def append(self, item: GuardIteration) -> None:
        self.iterations.append(item)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(item.to_dict()) + "\n")

    def to_list(self) -> list[dict]:
        return [it.to_dict() for it in self.iterations]


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def guard(
    plan: InsulinPlan,
    forecaster: Callable[[np.ndarray], GlucoseTrace],
    backend: LlmBackend,
    context: RetitrationContext,
    max_iters: int = DEFAULT_MAX_ITERS,
    max_bolus_iu: float = DEFAULT_MAX_BOLUS_IU,
    bounds: Optional[RiskBounds] = None,
    audit: Optional[GuardAudit] = None,
    model_retitrator: Optional[Callable[[InsulinPlan, RiskAssessment], np.ndarray]] = None,
) -> InsulinPlan:
    """Iterate forecast -> risk check -> re-titration until safe or bounded.

    Returns the first risk-free candidate with safety_status "safe" and the
    number of re-titrations it took. After max_iters re-titrations the
    candidate with the fewest risk events comes back flagged. A backend
    failure mid-loop flags immediately rather than stalling the patient.

    ``model_retitrator`` is an experimental alternative reviser (re-running
    the dose model with an adjusted target); default off.
    """
    candidate = plan
    best: tuple[int, InsulinPlan] = (1 << 30, plan)

    for iteration in range(max_iters + 1):
        trace = forecaster(candidate.doses_iu)
        risk = detect_risk(trace, bounds)
        item = GuardIteration(
            iteration=iteration,
            doses_iu=[float(d) for d in candidate.doses_iu],
            trace_mg_dl=[float(v) for v in trace.values_mg_dl],
            events=risk.to_dict()["events"],
        )
        if risk.is_safe:
            if audit is not None:
                item.note = "safe"
                audit.append(item)
            candidate.safety_status = STATUS_SAFE
            candidate.retitration_count = iteration
            return candidate
        if len(risk.events) < best[0]:
            best = (len(risk.events), candidate)
        if iteration == max_iters:
            if audit is not None:
                item.note = "iteration budget exhausted"
                audit.append(item)
            break

        context.candidate = candidate
        context.predicted_trace = trace
        context.risk = risk
        try:
            if model_retitrator is not None:
                revised = model_retitrator(candidate, risk)
                item.note = "model re-titration"
            else:
                prompt = build_retitration_prompt(context, max_bolus_iu)
                item.prompt_sha256 = _sha(prompt)
                response = backend.complete(prompt)
                item.response_sha256 = _sha(response)
                revised = parse_dose_response(response, max_bolus_iu)
        except BackendUnavailable as exc:
            item.note = f"backend unavailable: {exc}"
            if audit is not None:
                audit.append(item)
            flagged = best[1]
            flagged.safety_status = STATUS_FLAGGED
            flagged.retitration_count = iteration
            logger.error("guard aborted mid-loop: %s", exc)
            return flagged
        except MalformedResponse as exc:
            # An unparseable revision burns one iteration with the same plan.
            item.note = f"revision unusable: {exc}"
            revised = candidate.doses_iu
        if audit is not None:
            audit.append(item)
        candidate = candidate.with_doses(revised)

    flagged = best[1]
    flagged.safety_status = STATUS_FLAGGED
    flagged.retitration_count = max_iters
    return flagged
