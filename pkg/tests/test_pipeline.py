"""Unit conversion, grid resampling, segmentation, and splits."""
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glucoplan.errors import EmptyInput, GridTooShort, TooFewClips, UnknownUnit
from glucoplan.pipeline import (
    BASAL,
    BOLUS,
    GLUCOSE,
    NUMERIC_CHANNELS,
    RawRecord,
    adjust_subcutaneous_delay,
    normalize_units,
    reassemble,
    resample_to_grid,
    segment,
    split,
    synthetic_records,
)
from glucoplan.pipeline.records import CARB, EVENT_CHANNELS, MEAL_TEXT

T0 = datetime(2024, 3, 1, 8, 0)


def rec(minutes, channel, value, unit, route=None):
    return RawRecord(T0 + timedelta(minutes=minutes), channel, value, unit, route)


class TestNormalizeUnits:
    def test_insulin_ml_to_iu(self):
        out = normalize_units([rec(0, BOLUS, 0.04, "mL")])
        assert out[0].value == pytest.approx(4.0)
        assert out[0].unit == "IU"

    def test_glucose_identity(self):
        out = normalize_units([rec(0, GLUCOSE, 100.0, "mg/dl")])
        assert out[0].value == 100.0

    def test_glucose_mmol(self):
        out = normalize_units([rec(0, GLUCOSE, 3.9, "mmol/l")])
        assert out[0].value == pytest.approx(70.26, abs=0.05)

    def test_unknown_unit_reported(self):
        with pytest.raises(UnknownUnit) as err:
            normalize_units([rec(0, GLUCOSE, 1.0, "furlongs")])
        assert err.value.channel == GLUCOSE
        assert err.value.unit == "furlongs"

    def test_idempotent(self):
        records = [rec(0, BOLUS, 0.04, "mL"), rec(5, GLUCOSE, 5.5, "mmol/l"), rec(9, CARB, 30, "g")]
        once = normalize_units(records)
        twice = normalize_units(once)
        assert [r.value for r in once] == [r.value for r in twice]

    def test_meal_text_passes_through(self):
        out = normalize_units([rec(0, MEAL_TEXT, "rice", "text")])
        assert out[0].value == "rice"


class TestDelayAdjust:
    def test_subcutaneous_shifts(self):
        out = adjust_subcutaneous_delay([rec(0, BOLUS, 2, "IU", route="subcutaneous")])
        assert out[0].timestamp == T0 + timedelta(minutes=30)

    def test_intravenous_unchanged(self):
        out = adjust_subcutaneous_delay([rec(0, BOLUS, 2, "IU", route="intravenous")])
        assert out[0].timestamp == T0

    def test_missing_route_defaults_subcutaneous(self):
        out = adjust_subcutaneous_delay([rec(0, BASAL, 1, "IU")])
        assert out[0].timestamp == T0 + timedelta(minutes=30)
        assert out[0].route == "subcutaneous"

    def test_order_preserved(self):
        out = adjust_subcutaneous_delay(
            [rec(0, BOLUS, 1, "IU", route="subcutaneous"),
             rec(15, BOLUS, 2, "IU", route="subcutaneous")]
        )
        assert [r.value for r in out] == [1, 2]
        assert out[0].timestamp == T0 + timedelta(minutes=30)
        assert out[1].timestamp == T0 + timedelta(minutes=45)

    @given(st.lists(st.integers(min_value=0, max_value=500), min_size=2, max_size=30))
    def test_never_swaps_subcutaneous_events(self, offsets):
        offsets.sort()
        records = [rec(m, BOLUS, i, "IU", route="subcutaneous") for i, m in enumerate(offsets)]
        out = adjust_subcutaneous_delay(records)
        values = [r.value for r in out]
        assert values == sorted(values)


class TestResample:
    def test_events_sum_within_slot(self):
        grid = resample_to_grid([rec(0, BOLUS, 2, "IU"), rec(10, BOLUS, 2, "IU")])
        assert grid.channels[BOLUS][0] == pytest.approx(4.0)

    def test_glucose_averages(self):
        grid = resample_to_grid([rec(0, GLUCOSE, 98, "mg/dl"), rec(10, GLUCOSE, 102, "mg/dl")])
        assert grid.channels[GLUCOSE][0] == pytest.approx(100.0)

    def test_missing_slot_zero_filled_and_masked(self):
        grid = resample_to_grid([rec(0, GLUCOSE, 90, "mg/dl"), rec(30, GLUCOSE, 110, "mg/dl")])
        assert grid.channels[GLUCOSE][1] == 0.0
        assert bool(grid.missing_mask[GLUCOSE][1]) is True
        assert bool(grid.missing_mask[GLUCOSE][0]) is False

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            resample_to_grid([])
        with pytest.raises(EmptyInput):
            resample_to_grid([rec(0, MEAL_TEXT, "toast", "text")])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_bruteforce_oracle(self, seed):
        rng = np.random.default_rng(seed)
        count = int(rng.integers(1, 60))
        records = []
        for _ in range(count):
            minutes = int(rng.integers(0, 400))
            ch = NUMERIC_CHANNELS[rng.integers(len(NUMERIC_CHANNELS))]
            records.append(rec(minutes, ch, float(rng.uniform(0.5, 20)), "mg/dl" if ch == GLUCOSE else ("IU" if ch in (BOLUS, BASAL) else ("cal" if ch == "calories" else "g"))))
        grid = resample_to_grid(records)

        # oracle: dict-of-slots accumulation, then sum or mean
        records.sort(key=lambda r: r.timestamp)
        start = grid.start_time
        for ch in NUMERIC_CHANNELS:
            per_slot = {}
            for r in records:
                if r.channel != ch:
                    continue
                slot = int((r.timestamp - start).total_seconds() // 900)
                per_slot.setdefault(slot, []).append(float(r.value))
            for slot in range(grid.length):
                got = grid.channels[ch][slot]
                if slot in per_slot:
                    want = (np.mean if ch == GLUCOSE else np.sum)(per_slot[slot])
                    assert got == pytest.approx(want, rel=1e-12)
                    assert not grid.missing_mask[ch][slot]
                else:
                    assert got == 0.0
                    assert grid.missing_mask[ch][slot]


def demo_grid(length=40, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for slot in range(length):
        records.append(rec(15 * slot, GLUCOSE, float(rng.uniform(80, 200)), "mg/dl"))
        records.append(rec(15 * slot, BOLUS, float(rng.uniform(0, 4)), "IU"))
        records.append(rec(15 * slot, BASAL, 0.9, "IU"))
    return resample_to_grid(records)


class TestSegment:
    def test_clip_count_formula(self):
        grid = demo_grid(40)
        assert len(segment(grid, window=32, history_len=24)) == 9

    def test_future_len_default_geometry(self):
        clips = segment(demo_grid(40), window=32, history_len=24)
        assert clips[0].future_len == 8

    def test_too_short(self):
        with pytest.raises(GridTooShort):
            segment(demo_grid(31), window=32, history_len=24)

    def test_masks_cover_future(self):
        clip = segment(demo_grid(40), window=32, history_len=24)[0]
        assert clip.bolus_label_mask.sum() == 8
        assert clip.glucose_label_mask.sum() == 8
        assert not clip.bolus_label_mask[:24].any()
        assert clip.bolus_label_mask[24:].all()

    def test_labels_equal_premask_values(self):
        clip = segment(demo_grid(40), window=32, history_len=24)[3]
        np.testing.assert_array_equal(clip.labels(BOLUS), clip.values[BOLUS][24:])

    def test_basal_history_left_padded(self):
        clips = segment(demo_grid(40), window=32, history_len=24)
        clip = clips[0]
        assert clip.basal_24h.shape == (96,)
        # only 24 slots of history exist before the decision point
        assert np.all(clip.basal_24h[:72] == 0)
        np.testing.assert_allclose(clip.basal_24h[72:], 0.9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(33, 150), st.integers(1, 4))
    def test_count_and_roundtrip(self, length, stride):
        grid = demo_grid(length, seed=length)
        clips = segment(grid, window=32, history_len=24, stride=stride)
        assert len(clips) == (length - 32) // stride + 1
        rebuilt = reassemble(clips, length)
        for ch in NUMERIC_CHANNELS:
            covered = ~np.isnan(rebuilt[ch])
            np.testing.assert_array_equal(rebuilt[ch][covered], grid.channels[ch][covered])


class TestSplit:
    def make_clips(self, n, days=None):
        grid = demo_grid(max(40, n + 32))
        clips = segment(grid, window=32, history_len=24)[:n]
        for i, c in enumerate(clips):  # force one clip per synthetic day
            c.day_key = f"p|day{i if days is None else i % days}"
        return clips

    def test_proportions_100(self):
        ds = split(self.make_clips(100), seed=7)
        assert ds.counts() == (70, 15, 15)

    def test_rounding_ten_clips(self):
        ds = split(self.make_clips(10), seed=7)
        assert ds.counts() == (7, 2, 1)  # validation takes the remainder first

    def test_deterministic(self):
        clips = self.make_clips(60)
        a = split(clips, seed=3)
        b = split(clips, seed=3)
        assert [c.start_index for c in a.train_clips] == [c.start_index for c in b.train_clips]
        assert [c.start_index for c in a.test_clips] == [c.start_index for c in b.test_clips]

    def test_seed_changes_partition(self):
        clips = self.make_clips(60)
        a = split(clips, seed=3)
        b = split(clips, seed=4)
        assert [c.start_index for c in a.train_clips] != [c.start_index for c in b.train_clips]

    def test_too_few(self):
        with pytest.raises(TooFewClips):
            split(self.make_clips(9), seed=0)

    def test_patient_day_never_straddles(self):
        clips = self.make_clips(80, days=20)
        ds = split(clips, seed=11)
        seen = {}
        for name, part in (("train", ds.train_clips), ("val", ds.val_clips), ("test", ds.test_clips)):
            for c in part:
                assert seen.setdefault(c.day_key, name) == name

    @settings(max_examples=20, deadline=None)
    @given(st.integers(10, 200), st.integers(0, 1000))
    def test_proportions_within_one_clip(self, n, seed):
        ds = split(self.make_clips(n), seed=seed)
        tr, va, te = ds.counts()
        assert tr + va + te == n
        assert abs(tr - 0.70 * n) <= 1
        assert abs(va - 0.15 * n) <= 1
        assert abs(te - 0.15 * n) <= 1


def test_synthetic_records_resample_and_segment():
    records = synthetic_records("p1", days=1, seed=0)
    grid = resample_to_grid(records, patient_id="p1")
    assert grid.length == 96
    clips = segment(grid, window=32, history_len=24)
    assert len(clips) == 65
