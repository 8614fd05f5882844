"""Bridges the HTTP layer to the models and the guard loop."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import ShapeMismatch
from ..forecast import ForecastRequest, GlucoseTrace, forecast
from ..model.network import GlycemicModel
from ..model.profile import PatientProfile
from ..pipeline.records import (
    BASAL,
    BOLUS,
    CALORIES,
    CARB,
    DRUG,
    FAT,
    GLUCOSE,
    PROTEIN,
)
from ..titration import DEFAULT_MAX_BOLUS_IU, InsulinPlan, TitrationRequest, recommend

# Unit-explicit wire names <-> internal channel names.
WIRE_CHANNELS = {
    "glucose_mg_dl": GLUCOSE,
    "bolus_iu": BOLUS,
    "basal_iu": BASAL,
    "carb_g": CARB,
    "protein_g": PROTEIN,
    "fat_g": FAT,
    "calories_cal": CALORIES,
    "drug_g": DRUG,
}
NUTRIENT_WIRE = ("carb_g", "protein_g", "fat_g", "calories_cal")


def history_from_wire(payload: dict, history_len: int, basal_len: int) -> tuple[dict, np.ndarray]:
    """Decode the unit-named history block into channel arrays."""
    missing = [k for k in WIRE_CHANNELS if k not in payload]
    if missing:
        raise ShapeMismatch(f"history is missing fields: {missing}")
    history = {}
    for wire, channel in WIRE_CHANNELS.items():
        arr = np.asarray(payload[wire], dtype=float)
        if arr.shape != (history_len,):
            raise ShapeMismatch(
                f"history field {wire} must hold {history_len} values, got {arr.shape}"
            )
        history[channel] = arr
    basal = np.asarray(payload.get("basal_24h_iu", []), dtype=float)
    if basal.shape != (basal_len,):
        raise ShapeMismatch(f"basal_24h_iu must hold {basal_len} values, got {basal.shape}")
    return history, basal


@dataclass
class PlanningContext:
    """Everything assembled for one session before the models run."""

    patient_id: str
    profile: Optional[PatientProfile]
    history: dict
    basal_24h: np.ndarray
    future_nutrients: dict
    future_drugs: np.ndarray
    projected_basal: np.ndarray
    target_glucose: np.ndarray


class ModelRuntime:
    """Real-model implementation of the planning/forecasting pair."""

    def __init__(
        self,
        titration_model: GlycemicModel,
        glucose_model: GlycemicModel,
        max_bolus_iu: float = DEFAULT_MAX_BOLUS_IU,
    ):
        self.titration_model = titration_model
        self.glucose_model = glucose_model
        self.max_bolus_iu = max_bolus_iu

    @property
    def future_len(self) -> int:
        return self.titration_model.config.future_len

    @property
    def history_len(self) -> int:
        return self.titration_model.config.history_len

    @property
    def basal_len(self) -> int:
        return self.titration_model.config.basal_len

    def plan(self, ctx: PlanningContext) -> InsulinPlan:
        profile = ctx.profile if self.titration_model.config.group.uses_profile else None
        request = TitrationRequest(
            patient_id=ctx.patient_id,
            history=ctx.history,
            basal_24h=ctx.basal_24h,
            profile=profile,
            future_nutrients=ctx.future_nutrients,
            future_drugs=ctx.future_drugs,
            projected_basal=ctx.projected_basal,
            target_glucose=ctx.target_glucose,
        )
        return recommend(request, self.titration_model, max_bolus_iu=self.max_bolus_iu)

    def forecaster_for(self, ctx: PlanningContext) -> Callable[[np.ndarray], GlucoseTrace]:
        profile = ctx.profile if self.glucose_model.config.group.uses_profile else None

        def run(doses: np.ndarray) -> GlucoseTrace:
            request = ForecastRequest(
                patient_id=ctx.patient_id,
                history=ctx.history,
                basal_24h=ctx.basal_24h,
                profile=profile,
                future_nutrients=ctx.future_nutrients,
                future_drugs=ctx.future_drugs,
                projected_basal=ctx.projected_basal,
                candidate_doses_iu=np.asarray(doses, dtype=float),
            )
            return forecast(request, self.glucose_model)

        return run
