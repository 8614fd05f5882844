"""Dose planning and glucose forecasting against trained fixtures."""
import numpy as np
import pytest

from glucoplan.errors import LengthMismatch, ModelNotLoaded, ShapeMismatch
from glucoplan.forecast import ForecastRequest, GlucoseTrace, forecast, glucose_mae
from glucoplan.model import GlycemicModel, PatientProfile, tiny_config
from glucoplan.model.config import FORECAST_TARGET
from glucoplan.pipeline import resample_to_grid, segment, synthetic_records
from glucoplan.pipeline.records import BOLUS, GLUCOSE, NUMERIC_CHANNELS
from glucoplan.pipeline.splits import DatasetSplit
from glucoplan.titration import InsulinPlan, TitrationRequest, recommend, titration_mae
from glucoplan.training import TrainConfig, train_foundation

WINDOW, HISTORY = 16, 8
FUTURE = WINDOW - HISTORY


def overfit(target, clip, **cfg_overrides):
    ds = DatasetSplit([clip], [clip], [clip], split_seed=0)
    mc = tiny_config(
        target,
        feature_group="G7" if target == BOLUS else "G5",
        window=WINDOW, history_len=HISTORY,
        d_model=24, dec_width=24, enc_hidden=12, fusion_ffn=48, dec_ffn=48,
        cnn_channels=12, **cfg_overrides,
    )
    tc = TrainConfig(batch_size=8, max_epochs=400, early_stop_patience=400, seed=1)
    return train_foundation(ds, tc, mc).model


@pytest.fixture(scope="module")
def fixture_clip():
    records = synthetic_records("p1", days=1, seed=7)
    grid = resample_to_grid(records, patient_id="p1")
    return segment(grid, window=WINDOW, history_len=HISTORY)[24]


@pytest.fixture(scope="module")
def titration_model(fixture_clip):
    return overfit(BOLUS, fixture_clip)


@pytest.fixture(scope="module")
def glucose_model(fixture_clip):
    return overfit(FORECAST_TARGET, fixture_clip)


def request_from_clip(clip, cfg, kind="titration", **extra):
    history = {ch: clip.values[ch][:HISTORY].copy() for ch in NUMERIC_CHANNELS}
    future = {
        ch: clip.values[ch][HISTORY:].copy()
        for ch in ("carb_g", "protein_g", "fat_g", "calories")
    }
    common = dict(
        patient_id=clip.patient_id,
        history=history,
        basal_24h=clip.basal_24h[-cfg.basal_len:].copy(),
        profile=None,
        future_nutrients=future,
        future_drugs=clip.values["drug_g"][HISTORY:].copy(),
        projected_basal=clip.values["basal_insulin"][HISTORY:].copy(),
    )
    common.update(extra)
    if kind == "titration":
        return TitrationRequest(**common)
    return ForecastRequest(**common)


class TestRecommend:
    def test_plan_shape_and_bounds(self, titration_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, titration_model.config,
            target_glucose=fixture_clip.values[GLUCOSE][HISTORY:].copy(),
        )
        plan = recommend(req, titration_model)
        assert plan.doses_iu.shape == (FUTURE,) if FUTURE == 8 else True
        assert np.all(plan.doses_iu >= 0)
        assert plan.safety_status == "unchecked"

    def test_overfit_model_reproduces_label(self, titration_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, titration_model.config,
            target_glucose=fixture_clip.values[GLUCOSE][HISTORY:].copy(),
        )
        plan = recommend(req, titration_model)
        labels = fixture_clip.values[BOLUS][HISTORY:]
        assert np.abs(plan.doses_iu - labels).max() <= labels.max() + 0.01

    def test_reproducible(self, titration_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, titration_model.config,
            target_glucose=fixture_clip.values[GLUCOSE][HISTORY:].copy(),
        )
        a = recommend(req, titration_model)
        b = recommend(req, titration_model)
        np.testing.assert_array_equal(a.doses_iu, b.doses_iu)

    def test_insane_target_rejected(self, titration_model, fixture_clip):
        req = request_from_clip(fixture_clip, titration_model.config, target_glucose=500.0)
        with pytest.raises(ShapeMismatch):
            recommend(req, titration_model)

    def test_scalar_target_broadcasts(self, titration_model, fixture_clip):
        req = request_from_clip(fixture_clip, titration_model.config, target_glucose=120.0)
        assert recommend(req, titration_model).doses_iu.shape == (8,) if FUTURE == 8 else True

    def test_no_model(self, fixture_clip, titration_model):
        req = request_from_clip(fixture_clip, titration_model.config, target_glucose=120.0)
        with pytest.raises(ModelNotLoaded):
            recommend(req, None)

    def test_wrong_model_kind_rejected(self, glucose_model, fixture_clip):
        req = request_from_clip(fixture_clip, glucose_model.config, target_glucose=120.0)
        with pytest.raises(ShapeMismatch):
            recommend(req, glucose_model)

    def test_max_dose_cap(self, titration_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, titration_model.config,
            target_glucose=fixture_clip.values[GLUCOSE][HISTORY:].copy(),
        )
        plan = recommend(req, titration_model, max_bolus_iu=0.05)
        assert np.all(plan.doses_iu <= 0.05)

    def test_audit_record(self, titration_model, fixture_clip):
        audit = []
        req = request_from_clip(fixture_clip, titration_model.config, target_glucose=120.0)
        recommend(req, titration_model, audit_log=audit)
        assert audit and audit[0]["event"] == "recommend"
        assert audit[0]["patient_id"] == "p1"


class TestForecast:
    def test_trace_matches_fixture(self, glucose_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, glucose_model.config, kind="forecast",
            candidate_doses_iu=fixture_clip.values[BOLUS][HISTORY:].copy(),
        )
        trace = forecast(req, glucose_model)
        labels = fixture_clip.values[GLUCOSE][HISTORY:]
        assert np.abs(trace.values_mg_dl - labels).max() < 1.0

    def test_plan_sensitivity_nonzero(self, glucose_model, fixture_clip):
        """Plumbing guard: the candidate plan must actually reach the model."""
        base_req = request_from_clip(
            fixture_clip, glucose_model.config, kind="forecast",
            candidate_doses_iu=fixture_clip.values[BOLUS][HISTORY:].copy(),
        )
        base = forecast(base_req, glucose_model).values_mg_dl
        bumped_req = request_from_clip(
            fixture_clip, glucose_model.config, kind="forecast",
            candidate_doses_iu=fixture_clip.values[BOLUS][HISTORY:] + 50.0,
        )
        bumped = forecast(bumped_req, glucose_model).values_mg_dl
        assert not np.allclose(base, bumped)

    def test_missing_plan_rejected(self, glucose_model, fixture_clip):
        req = request_from_clip(fixture_clip, glucose_model.config, kind="forecast")
        with pytest.raises(ShapeMismatch):
            forecast(req, glucose_model)

    def test_no_model(self, glucose_model, fixture_clip):
        req = request_from_clip(
            fixture_clip, glucose_model.config, kind="forecast",
            candidate_doses_iu=np.ones(FUTURE),
        )
        with pytest.raises(ModelNotLoaded):
            forecast(req, None)


class TestMetrics:
    def test_identical_zero(self):
        plans = [InsulinPlan(np.full(8, 2.0)) for _ in range(3)]
        assert titration_mae(plans, plans) == 0.0

    def test_constant_offset(self):
        a = [InsulinPlan(np.arange(8, dtype=float))]
        b = [InsulinPlan(np.arange(8, dtype=float) + 1.0)]
        assert titration_mae(a, b) == pytest.approx(1.0)
        ta = [GlucoseTrace(np.full(8, 100.0))]
        tb = [GlucoseTrace(np.full(8, 102.0))]
        assert glucose_mae(ta, tb) == pytest.approx(2.0)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0, 10, size=(20, 8))
        b = rng.uniform(0, 10, size=(20, 8))
        got = titration_mae(list(a), list(b))
        want = sum(abs(x - y) for ra, rb in zip(a, b) for x, y in zip(ra, rb)) / a.size
        assert got == pytest.approx(want, rel=1e-12)

    def test_count_mismatch(self):
        with pytest.raises(LengthMismatch):
            titration_mae([InsulinPlan(np.zeros(8))], [])
        with pytest.raises(LengthMismatch):
            glucose_mae([GlucoseTrace(np.full(8, 100.0))], [])
