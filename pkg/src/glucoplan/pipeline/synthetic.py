"""Synthetic patient records for demos, fixtures, and tests.

Not a physiological simulator: glucose follows a bounded random walk with
meal bumps and dose dips, which is enough to exercise the pipeline, the
models, and the service end to end without licensed clinical data.
"""
from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np

from .records import (
    BASAL,
    BOLUS,
    CALORIES,
    CARB,
    DRUG,
    FAT,
    GLUCOSE,
    MEAL_TEXT,
    PROTEIN,
    RawRecord,
)

_MEALS = (
    ("oatmeal with milk and a banana", 52.0, 12.0, 7.0, 320.0),
    ("white rice 200 g with chicken breast", 58.0, 35.0, 5.0, 430.0),
    ("pasta with tomato sauce", 65.0, 14.0, 9.0, 410.0),
    ("two eggs and wholegrain bread", 28.0, 19.0, 14.0, 330.0),
    ("apple and yogurt", 32.0, 7.0, 4.0, 190.0),
    ("noodle soup with tofu", 45.0, 18.0, 8.0, 340.0),
)


def synthetic_records(
    patient_id: str,
    days: int = 3,
    seed: int = 0,
    start: datetime | None = None,
    interval_minutes: int = 15,
) -> list[RawRecord]:
    """Generate canonical-unit records covering ``days`` full days."""
    rng = np.random.default_rng(seed)
    start = start or datetime(2024, 3, 1, 0, 0)
    slots_per_day = 24 * 60 // interval_minutes
    total = days * slots_per_day

    records: list[RawRecord] = []
    glucose = 120.0
    pending_bumps: list[tuple[int, float]] = []

    for slot in range(total):
        ts = start + timedelta(minutes=slot * interval_minutes)
        hour = ts.hour

        bump = sum(v for s, v in pending_bumps if s == slot)
        pending_bumps = [(s, v) for s, v in pending_bumps if s > slot]
        glucose = float(np.clip(glucose + bump + rng.normal(0.0, 4.0), 55.0, 320.0))
        records.append(RawRecord(ts, GLUCOSE, round(glucose, 1), "mg/dl"))

        if hour in (7, 12, 18) and ts.minute == 0:
            meal, carb, protein, fat, cal = _MEALS[rng.integers(len(_MEALS))]
            scale = float(rng.uniform(0.8, 1.2))
            records.append(RawRecord(ts, MEAL_TEXT, meal, "text"))
            records.append(RawRecord(ts, CARB, round(carb * scale, 1), "g"))
            records.append(RawRecord(ts, PROTEIN, round(protein * scale, 1), "g"))
            records.append(RawRecord(ts, FAT, round(fat * scale, 1), "g"))
            records.append(RawRecord(ts, CALORIES, round(cal * scale, 0), "cal"))
            # Meal raises glucose over the next 1-2 h; the bolus pulls back.
            dose = round(carb * scale / 10.0, 1)
            records.append(RawRecord(ts, BOLUS, dose, "IU", route="intravenous"))
            for k in range(2, 8):
                pending_bumps.append((slot + k, carb * scale * 0.35 - dose * 2.2))

        if ts.minute == 0:  # hourly basal drip
            records.append(RawRecord(ts, BASAL, 0.9, "IU", route="intravenous"))
        if hour == 8 and ts.minute == 0:
            records.append(RawRecord(ts, DRUG, 0.5, "g"))

    return records


def synthetic_profile(patient_id: str, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed + 17)
    height = float(rng.uniform(155, 190))
    weight = float(rng.uniform(50, 95))
    return {
        "patient_id": patient_id,
        "height_cm": round(height, 1),
        "weight_kg": round(weight, 1),
        "age_years": int(rng.integers(22, 75)),
        "sex": "female" if rng.random() < 0.5 else "male",
        "bmi": round(weight / (height / 100.0) ** 2, 1),
        "diabetes_type": int(rng.integers(1, 3)),
        "illness_duration_years": float(rng.integers(1, 20)),
        "smoking": bool(rng.random() < 0.2),
        "drinking": bool(rng.random() < 0.3),
    }


def write_synthetic_dataset(out_dir, patients: int = 2, days: int = 3, seed: int = 0) -> None:
    """Emit a canonical-format demo dataset (CSV + profile sidecars)."""
    import json
    from pathlib import Path

    from .adapters import write_canonical

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(patients):
        pid = f"demo{i + 1}"
        write_canonical(out / f"{pid}.csv", synthetic_records(pid, days=days, seed=seed + i))
        (out / f"{pid}.profile.json").write_text(
            json.dumps(synthetic_profile(pid, seed=seed + i), indent=2), encoding="utf-8"
        )


if __name__ == "__main__":
    import sys

    write_synthetic_dataset(
        sys.argv[1] if len(sys.argv) > 1 else "demo-data",
        patients=int(sys.argv[2]) if len(sys.argv) > 2 else 2,
        days=int(sys.argv[3]) if len(sys.argv) > 3 else 3,
    )
    print(f"wrote demo dataset -> {sys.argv[1] if len(sys.argv) > 1 else 'demo-data'}")
