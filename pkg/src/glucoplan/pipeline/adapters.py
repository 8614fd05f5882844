"""Dataset ingestion: map external exports onto the canonical patient CSV.

Canonical format: one UTF-8 CSV per patient with header
``timestamp,channel,value,unit,route`` and ISO-8601 timestamps. Two adapter
flavors map common research exports onto it:

* ``shanghai`` — one row per 15-min timestamp with wide columns
  (``Date``, ``CGM (mg / dl)``, ``Dietary intake``, dose text like
  ``"Novolin R, 2 IU"`` in the s.c./i.v. columns).
* ``ohio`` — 5-min cadence rows ``ts,glucose,bolus_iu,basal_iu,carbs_g``;
  the finer cadence is reconciled later by the grid's slot aggregation.

A profile sidecar ``<patient>.profile.json`` is copied through when present.
"""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable

from ..errors import AdapterMismatch, EmptyInput
from ..model.profile import PatientProfile
from .records import (
    BASAL,
    BOLUS,
    CARB,
    GLUCOSE,
    MEAL_TEXT,
    NUMERIC_CHANNELS,
    ROUTE_INTRAVENOUS,
    ROUTE_SUBCUTANEOUS,
    RawRecord,
    normalize_units,
)

CANONICAL_HEADER = ["timestamp", "channel", "value", "unit", "route"]

_SHANGHAI_COLUMNS = {
    "date": "Date",
    "cgm": "CGM (mg / dl)",
    "diet": "Dietary intake",
    "sc": "Insulin dose - s.c.",
    "iv": "Insulin dose - i.v.",
    "basal": "Basal insulin (IU / h)",
}
_OHIO_COLUMNS = ["ts", "glucose", "bolus_iu", "basal_iu", "carbs_g"]

_DOSE_TEXT = re.compile(r"^(?:(?P<name>[^,]+),\s*)?(?P<amount>\d+(?:\.\d+)?)\s*(?P<unit>iu|u|ml)\s*$", re.I)


def _parse_ts(text: str, where: str) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise AdapterMismatch(f"{where}: bad timestamp {text!r}") from exc


def read_canonical(path: Path) -> list[RawRecord]:
    """Read one canonical patient CSV into raw records (units as stated)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CANONICAL_HEADER:
            raise AdapterMismatch(
                f"{path.name}: expected header {CANONICAL_HEADER}, got {reader.fieldnames}"
            )
        records = []
        for i, row in enumerate(reader, start=2):
            channel = row["channel"].strip()
            if channel not in NUMERIC_CHANNELS and channel != MEAL_TEXT:
                raise AdapterMismatch(f"{path.name}:{i}: unknown channel {channel!r}")
            value = row["value"] if channel == MEAL_TEXT else float(row["value"])
            records.append(
                RawRecord(
                    timestamp=_parse_ts(row["timestamp"], f"{path.name}:{i}"),
                    channel=channel,
                    value=value,
                    unit=row["unit"].strip(),
                    route=row["route"].strip() or None,
                )
            )
        return records


def write_canonical(path: Path, records: Iterable[RawRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CANONICAL_HEADER)
        for rec in records:
            writer.writerow(
                [rec.timestamp.isoformat(), rec.channel, rec.value, rec.unit, rec.route or ""]
            )


def _parse_dose_text(text: str, row_no: int, name: str) -> tuple[float, str]:
    match = _DOSE_TEXT.match(text.strip())
    if not match:
        raise AdapterMismatch(f"row {row_no}: cannot parse {name} dose {text!r}")
    return float(match.group("amount")), match.group("unit")


def read_shanghai(path: Path) -> list[RawRecord]:
    """Map a wide per-timestamp export onto canonical records.

    Textual dose cells become bolus records with the stated route; the
    dietary text column becomes meal_text records consumed by the
    dietary-analysis path.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in _SHANGHAI_COLUMNS.values() if c not in (reader.fieldnames or [])]
        if missing:
            raise AdapterMismatch(f"{path.name}: missing columns {missing}")
        records = []
        for i, row in enumerate(reader, start=2):
            ts = _parse_ts(row[_SHANGHAI_COLUMNS["date"]], f"{path.name}:{i}")
            cgm = row[_SHANGHAI_COLUMNS["cgm"]].strip()
            if cgm:
                records.append(RawRecord(ts, GLUCOSE, float(cgm), "mg/dl"))
            diet = row[_SHANGHAI_COLUMNS["diet"]].strip()
            if diet:
                records.append(RawRecord(ts, MEAL_TEXT, diet, "text"))
            for key, route in (("sc", ROUTE_SUBCUTANEOUS), ("iv", ROUTE_INTRAVENOUS)):
                cell = row[_SHANGHAI_COLUMNS[key]].strip()
                if cell:
                    amount, unit = _parse_dose_text(cell, i, key)
                    records.append(RawRecord(ts, BOLUS, amount, unit, route=route))
            basal = row[_SHANGHAI_COLUMNS["basal"]].strip()
            if basal:
                # Hourly rate sampled every 15 min: one quarter per slot.
                records.append(
                    RawRecord(ts, BASAL, float(basal) / 4.0, "IU", route=ROUTE_SUBCUTANEOUS)
                )
        return records


def read_ohio(path: Path) -> list[RawRecord]:
    """Map a 5-min cadence export onto canonical records."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _OHIO_COLUMNS:
            raise AdapterMismatch(
                f"{path.name}: expected header {_OHIO_COLUMNS}, got {reader.fieldnames}"
            )
        records = []
        for i, row in enumerate(reader, start=2):
            ts = _parse_ts(row["ts"], f"{path.name}:{i}")
            if row["glucose"].strip():
                records.append(RawRecord(ts, GLUCOSE, float(row["glucose"]), "mg/dl"))
            if row["bolus_iu"].strip():
                records.append(
                    RawRecord(ts, BOLUS, float(row["bolus_iu"]), "IU", route=ROUTE_SUBCUTANEOUS)
                )
            if row["basal_iu"].strip():
                records.append(
                    RawRecord(ts, BASAL, float(row["basal_iu"]), "IU", route=ROUTE_SUBCUTANEOUS)
                )
            if row["carbs_g"].strip():
                records.append(RawRecord(ts, CARB, float(row["carbs_g"]), "g"))
        return records


ADAPTERS: dict[str, Callable[[Path], list[RawRecord]]] = {
    "canonical": read_canonical,
    "shanghai": read_shanghai,
    "ohio": read_ohio,
}


@dataclass
class IngestResult:
    patient_id: str
    records: list[RawRecord]
    profile: PatientProfile | None


def load_profile_sidecar(csv_path: Path) -> PatientProfile | None:
    sidecar = csv_path.with_suffix("").with_suffix(".profile.json")
    if not sidecar.exists():
        sidecar = csv_path.parent / (csv_path.stem + ".profile.json")
    if not sidecar.exists():
        return None
    with open(sidecar, encoding="utf-8") as fh:
        return PatientProfile.from_dict(json.load(fh))


def ingest_directory(data_dir: Path, adapter: str) -> list[IngestResult]:
    """Read every patient CSV in a directory with the chosen adapter.

    Records come back unit-normalized and time-sorted; the patient id is
    the file stem.
    """
    try:
        reader = ADAPTERS[adapter]
    except KeyError:
        raise AdapterMismatch(f"unknown adapter {adapter!r}; choose from {sorted(ADAPTERS)}")
    paths = sorted(p for p in Path(data_dir).glob("*.csv"))
    if not paths:
        raise EmptyInput(f"no .csv files under {data_dir}")
    results = []
    for path in paths:
        records = normalize_units(reader(path))
        records.sort(key=lambda r: r.timestamp)
        results.append(
            IngestResult(
                patient_id=path.stem,
                records=records,
                profile=load_profile_sidecar(path),
            )
        )
    return results
