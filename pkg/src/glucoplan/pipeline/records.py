"""Raw patient records: canonical units and injection-timing adjustment.

A patient file is a flat list of timestamped records, one channel each.
Everything downstream assumes canonical units: insulin in IU, glucose in
mg/dl, nutrients and drugs in grams, energy in dietary calories.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Iterable, Optional, Union

from ..errors import UnknownUnit

GLUCOSE = "glucose"
BOLUS = "bolus_insulin"
BASAL = "basal_insulin"
CARB = "carb_g"
PROTEIN = "protein_g"
FAT = "fat_g"
CALORIES = "calories"
DRUG = "drug_g"
MEAL_TEXT = "meal_text"

# Fixed channel order used for grid/bundle assembly everywhere.
NUMERIC_CHANNELS = (GLUCOSE, BOLUS, BASAL, CARB, PROTEIN, FAT, CALORIES, DRUG)
ALL_CHANNELS = NUMERIC_CHANNELS + (MEAL_TEXT,)

INSULIN_CHANNELS = (BOLUS, BASAL)

# Slot aggregation: doses and intakes are events (mass is conserved by
# summing), glucose is a sensor level (averaged to smooth noise).
EVENT_CHANNELS = (BOLUS, BASAL, CARB, PROTEIN, FAT, CALORIES, DRUG)
LEVEL_CHANNELS = (GLUCOSE,)

ROUTE_SUBCUTANEOUS = "subcutaneous"
ROUTE_INTRAVENOUS = "intravenous"

# (channel, unit) -> multiplicative factor to the canonical unit.
# 1 IU = 0.01 mL of standard insulin preparation, so mL -> IU is x100.
# "cal" is the dietary calorie as printed on food labels; "kcal" is the
# same quantity under its other common name.
_FACTORS = {
    (GLUCOSE, "mg/dl"): 1.0,
    (GLUCOSE, "mmol/l"): 18.016,
    (CARB, "g"): 1.0,
    (CARB, "mg"): 1e-3,
    (PROTEIN, "g"): 1.0,
    (PROTEIN, "mg"): 1e-3,
    (FAT, "g"): 1.0,
    (FAT, "mg"): 1e-3,
    (DRUG, "g"): 1.0,
    (DRUG, "mg"): 1e-3,
    (CALORIES, "cal"): 1.0,
    (CALORIES, "kcal"): 1.0,
    (CALORIES, "kj"): 1.0 / 4.184,
}
for _ins in INSULIN_CHANNELS:
    _FACTORS[(_ins, "iu")] = 1.0
    _FACTORS[(_ins, "u")] = 1.0
    _FACTORS[(_ins, "ml")] = 100.0

CANONICAL_UNITS = {
    GLUCOSE: "mg/dl",
    BOLUS: "IU",
    BASAL: "IU",
    CARB: "g",
    PROTEIN: "g",
    FAT: "g",
    CALORIES: "cal",
    DRUG: "g",
    MEAL_TEXT: "text",
}


@dataclass(frozen=True)
class RawRecord:
    """One timestamped observation on a single channel."""

    timestamp: datetime
    channel: str
    value: Union[float, str]
    unit: str
    route: Optional[str] = None  # insulin channels only

    def is_text(self) -> bool:
        return self.channel == MEAL_TEXT


def _norm_unit(unit: str) -> str:
    return unit.strip().lower().replace(" ", "")


def normalize_units(records: Iterable[RawRecord]) -> list[RawRecord]:
    """Convert every record to canonical units.

    Raises UnknownUnit for any (channel, unit) pair missing from the
    conversion table; records are never silently dropped.
    """
    out = []
    for rec in records:
        if rec.is_text():
            out.append(replace(rec, unit=CANONICAL_UNITS[MEAL_TEXT]))
            continue
        if rec.channel not in NUMERIC_CHANNELS:
            raise UnknownUnit(rec.channel, rec.unit)
        factor = _FACTORS.get((rec.channel, _norm_unit(rec.unit)))
        if factor is None:
            raise UnknownUnit(rec.channel, rec.unit)
        out.append(
            replace(rec, value=float(rec.value) * factor, unit=CANONICAL_UNITS[rec.channel])
        )
    return out


def adjust_subcutaneous_delay(
    records: Iterable[RawRecord], delay_minutes: int = 30
) -> list[RawRecord]:
    """Shift subcutaneous insulin records forward by the absorption delay.

    Subcutaneous injections take effect roughly half an hour late, so their
    timestamps move +30 min to line up with intravenous ones. A missing
    route defaults to subcutaneous (home records are overwhelmingly
    injections, not IV drips). The result is re-sorted; the sort is stable,
    so the uniform shift never swaps two subcutaneous events.
    """
    shift = timedelta(minutes=delay_minutes)
    out = []
    for rec in records:
        if rec.channel in INSULIN_CHANNELS:
            route = rec.route or ROUTE_SUBCUTANEOUS
            if route == ROUTE_SUBCUTANEOUS:
                rec = replace(rec, timestamp=rec.timestamp + shift, route=route)
            else:
                rec = replace(rec, route=route)
        out.append(rec)
    out.sort(key=lambda r: r.timestamp)
    return out
