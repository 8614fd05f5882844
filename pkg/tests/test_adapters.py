"""Dataset adapters: canonical round-trip, shanghai/ohio mapping, mismatch."""
import json
from datetime import datetime

import pytest

from glucoplan.errors import AdapterMismatch, EmptyInput
from glucoplan.pipeline.adapters import (
    ingest_directory,
    read_canonical,
    read_ohio,
    read_shanghai,
    write_canonical,
)
from glucoplan.pipeline.dataset import load_patient_dir
from glucoplan.pipeline.records import BASAL, BOLUS, CARB, GLUCOSE, MEAL_TEXT
from glucoplan.pipeline.synthetic import synthetic_profile, synthetic_records

SHANGHAI_HEADER = (
    "Date,CGM (mg / dl),Dietary intake,Insulin dose - s.c.,"
    "Insulin dose - i.v.,Basal insulin (IU / h)\n"
)


def write_shanghai(path, rows):
    path.write_text(SHANGHAI_HEADER + "".join(rows), encoding="utf-8")


def test_canonical_roundtrip(tmp_path):
    records = synthetic_records("p1", days=1, seed=2)
    path = tmp_path / "p1.csv"
    write_canonical(path, records)
    loaded = read_canonical(path)
    assert len(loaded) == len(records)
    assert loaded[0].timestamp == records[0].timestamp
    texts = [r for r in loaded if r.channel == MEAL_TEXT]
    assert texts and isinstance(texts[0].value, str)


def test_canonical_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,chan,val\n1,2,3\n", encoding="utf-8")
    with pytest.raises(AdapterMismatch):
        read_canonical(path)


def test_canonical_rejects_unknown_channel(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "timestamp,channel,value,unit,route\n2024-03-01T08:00,heartrate,60,bpm,\n",
        encoding="utf-8",
    )
    with pytest.raises(AdapterMismatch) as err:
        read_canonical(path)
    assert "heartrate" in str(err.value)


class TestShanghaiAdapter:
    def test_maps_columns(self, tmp_path):
        path = tmp_path / "s1.csv"
        write_shanghai(path, [
            "2024-03-01T08:00,132,rice porridge,\"Novolin R, 2 IU\",,1.2\n",
            "2024-03-01T08:15,140,,,\"3 IU\",\n",
        ])
        records = read_shanghai(path)
        by_channel = {}
        for r in records:
            by_channel.setdefault(r.channel, []).append(r)
        assert [r.value for r in by_channel[GLUCOSE]] == [132.0, 140.0]
        assert by_channel[MEAL_TEXT][0].value == "rice porridge"
        sc, iv = by_channel[BOLUS]
        assert (sc.value, sc.route) == (2.0, "subcutaneous")
        assert (iv.value, iv.route) == (3.0, "intravenous")
        # hourly basal rate becomes a quarter-dose per 15-min slot
        assert by_channel[BASAL][0].value == pytest.approx(0.3)

    def test_dose_text_variants(self, tmp_path):
        path = tmp_path / "s1.csv"
        write_shanghai(path, ['2024-03-01T08:00,,,"0.04 ml",,\n'])
        records = read_shanghai(path)
        assert records[0].unit == "ml"
        assert records[0].value == pytest.approx(0.04)

    def test_unparseable_dose(self, tmp_path):
        path = tmp_path / "s1.csv"
        write_shanghai(path, ["2024-03-01T08:00,,,two units,,\n"])
        with pytest.raises(AdapterMismatch):
            read_shanghai(path)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "s1.csv"
        path.write_text("Date,CGM\n2024-03-01T08:00,132\n", encoding="utf-8")
        with pytest.raises(AdapterMismatch):
            read_shanghai(path)


class TestOhioAdapter:
    def test_maps_five_minute_rows(self, tmp_path):
        path = tmp_path / "o1.csv"
        path.write_text(
            "ts,glucose,bolus_iu,basal_iu,carbs_g\n"
            "2024-03-01T08:00,110,,0.05,\n"
            "2024-03-01T08:05,114,1.5,0.05,30\n",
            encoding="utf-8",
        )
        records = read_ohio(path)
        channels = {r.channel for r in records}
        assert channels == {GLUCOSE, BOLUS, BASAL, CARB}
        bolus = [r for r in records if r.channel == BOLUS][0]
        assert bolus.route == "subcutaneous"

    def test_ohio_on_shanghai_layout_mismatch(self, tmp_path):
        path = tmp_path / "s1.csv"
        write_shanghai(path, ["2024-03-01T08:00,132,,,,\n"])
        with pytest.raises(AdapterMismatch):
            read_ohio(path)

    def test_five_minute_data_lands_on_15_minute_grid(self, tmp_path):
        rows = ["ts,glucose,bolus_iu,basal_iu,carbs_g\n"]
        for minute in range(0, 60, 5):
            rows.append(f"2024-03-01T08:{minute:02d},{100 + minute},,0.05,\n")
        (tmp_path / "o1.csv").write_text("".join(rows), encoding="utf-8")
        bundle = load_patient_dir(tmp_path, adapter="ohio", window=4, history_len=2,
                                  apply_injection_delay=False)
        summary = bundle.summaries[0]
        assert summary.slots == 4  # 60 minutes -> 4 slots
        assert summary.clips == 1


def test_ingest_directory_empty(tmp_path):
    with pytest.raises(EmptyInput):
        ingest_directory(tmp_path, "canonical")


def test_ingest_unknown_adapter(tmp_path):
    (tmp_path / "p.csv").write_text("x", encoding="utf-8")
    with pytest.raises(AdapterMismatch):
        ingest_directory(tmp_path, "mystery")


def test_profile_sidecar_loaded(tmp_path):
    write_canonical(tmp_path / "p9.csv", synthetic_records("p9", days=1, seed=0))
    (tmp_path / "p9.profile.json").write_text(
        json.dumps(synthetic_profile("p9", seed=0)), encoding="utf-8"
    )
    bundle = load_patient_dir(tmp_path, window=16, history_len=8)
    assert "p9" in bundle.profiles
    assert bundle.profiles["p9"].height_cm > 0
