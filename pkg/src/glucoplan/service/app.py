"""WSGI application exposing the full meal-to-guarded-plan workflow.

Plain WSGI keeps the service dependency-free and testable in process; any
WSGI server can host it. Clinical numbers always travel under unit-named
fields (dose_iu, glucose_mg_dl), and every session response repeats the
research disclaimer. No code path returns a plan that skipped the guard.
"""
from __future__ import annotations

import json
import logging
import mimetypes
import re
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional
from wsgiref.simple_server import WSGIServer, make_server
from socketserver import ThreadingMixIn

import numpy as np

from ..errors import BackendUnavailable, GlucoplanError
from ..model.profile import PatientProfile
from ..nutrition import MealDescription, estimate_nutrients
from ..nutrition.backends import LlmBackend
from ..safety import GuardAudit, RetitrationContext, detect_risk, guard
from ..titration import STATUS_SAFE
from .runtime import NUTRIENT_WIRE, WIRE_CHANNELS, PlanningContext, history_from_wire
from .store import Conflict, FileStore, NotFound

logger = logging.getLogger(__name__)

DISCLAIMER = (
    "Research artifact. Outputs are not medical advice; never dose insulin "
    "from them without clinical supervision."
)


class HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


_STATUS_TEXT = {
    200: "200 OK",
    201: "201 Created",
    404: "404 Not Found",
    405: "405 Method Not Allowed",
    409: "409 Conflict",
    422: "422 Unprocessable Entity",
    500: "500 Internal Server Error",
    503: "503 Service Unavailable",
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class App:
    def __init__(
        self,
        store: FileStore,
        runtime,  # ModelRuntime or a stub with the same surface
        backend: LlmBackend,
        max_iters: int = 5,
        static_dir: Optional[str | Path] = None,
    ):
        self.store = store
        self.runtime = runtime
        self.backend = backend
        self.max_iters = max_iters
        self.static_dir = Path(static_dir) if static_dir else None
        self.routes: list[tuple[str, re.Pattern, Callable]] = [
            ("GET", re.compile(r"^/health$"), self.health),
            ("POST", re.compile(r"^/patients$"), self.create_patient),
            ("GET", re.compile(r"^/patients/(?P<pid>[^/]+)$"), self.get_patient),
            ("PUT", re.compile(r"^/patients/(?P<pid>[^/]+)/history$"), self.put_history),
            ("POST", re.compile(r"^/sessions$"), self.create_session),
            ("GET", re.compile(r"^/sessions/(?P<sid>[^/]+)$"), self.get_session),
        ]

    # -- wsgi -----------------------------------------------------------------

    def __call__(self, environ, start_response):
        method = environ["REQUEST_METHOD"]
        path = environ.get("PATH_INFO", "/")
        try:
            for verb, pattern, handler in self.routes:
                match = pattern.match(path)
                if match:
                    if verb != method:
                        raise HttpError(405, f"{method} not allowed on {path}")
                    body = self._read_json(environ) if method in ("POST", "PUT") else None
                    status, payload = handler(body, **match.groupdict())
                    return self._respond(start_response, status, payload)
            if method == "GET" and self.static_dir:
                return self._static(start_response, path)
            raise HttpError(404, f"no route for {path}")
        except HttpError as err:
            return self._respond(start_response, err.status, {"error": err.message})
        except NotFound as err:
            return self._respond(start_response, 404, {"error": str(err)})
        except Conflict as err:
            return self._respond(start_response, 409, {"error": str(err)})
        except BackendUnavailable as err:
            return self._respond(start_response, 503, {"error": str(err)})
        except GlucoplanError as err:
            return self._respond(start_response, 422, {"error": str(err)})
        except Exception:
            logger.error("internal error on %s %s\n%s", method, path, traceback.format_exc())
            return self._respond(start_response, 500, {"error": "internal error"})

    def _read_json(self, environ) -> dict:
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
            raw = environ["wsgi.input"].read(length) if length else b"{}"
            body = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise HttpError(422, f"request body is not valid JSON: {exc}")
        if not isinstance(body, dict):
            raise HttpError(422, "request body must be a JSON object")
        return body

    def _respond(self, start_response, status: int, payload: dict):
        data = json.dumps(payload, indent=2).encode("utf-8")
        start_response(
            _STATUS_TEXT.get(status, f"{status} Status"),
            [("Content-Type", "application/json"), ("Content-Length", str(len(data)))],
        )
        return [data]

    def _static(self, start_response, path: str):
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            raise HttpError(404, f"no route for {path}")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        start_response("200 OK", [("Content-Type", ctype), ("Content-Length", str(len(data)))])
        return [data]

    # -- handlers ---------------------------------------------------------------

    def health(self, _body):
        return 200, {
            "status": "ok",
            "models": {
                "titration": self.runtime is not None,
                "glucose": self.runtime is not None,
            },
            "backend": self.backend.name,
            "disclaimer": DISCLAIMER,
        }

    def create_patient(self, body):
        patient_id = body.pop("patient_id", None)
        try:
            profile = PatientProfile.from_dict(body)
        except TypeError as exc:
            raise HttpError(422, f"bad profile: {exc}")
        try:
            pid = self.store.create_patient(profile, patient_id)
        except Conflict:
            raise HttpError(409, json.dumps({"existing_id": patient_id}))
        return 201, {"patient_id": pid, "version": 1}

    def get_patient(self, _body, pid: str):
        doc = self.store.get_patient_document(pid)
        return 200, doc

    def put_history(self, body, pid: str):
        # validate the shape before persisting so sessions can trust it
        history_from_wire(body, self.runtime.history_len, self.runtime.basal_len)
        self.store.put_history(pid, body)
        return 200, {"patient_id": pid, "updated": True}

    def create_session(self, body):
        for field in ("patient_id", "meal_text", "target_glucose_mg_dl"):
            if field not in body:
                raise HttpError(422, f"missing field {field!r}")
        pid = body["patient_id"]
        profile = self.store.get_patient(pid)  # NotFound -> 404

        meal = MealDescription(text=str(body["meal_text"]))
        nutrient_note = ""
        estimate = estimate_nutrients(meal, self.backend)
        if estimate.source != "llm":
            nutrient_note = "language backend unavailable; offline nutrient table used"

        wire_history = body.get("history") or self.store.get_history(pid)
        if wire_history is None:
            raise HttpError(
                422, f"no glycemic history: PUT /patients/{pid}/history or embed 'history'"
            )
        history, basal_24h = history_from_wire(
            wire_history, self.runtime.history_len, self.runtime.basal_len
        )

        future_len = self.runtime.future_len
        future = body.get("future", {})
        nutrients_future = {}
        meal_values = {
            "carb_g": estimate.carbohydrate_g,
            "protein_g": estimate.protein_g,
            "fat_g": estimate.fat_g,
            "calories_cal": estimate.calories_cal,
        }
        for wire in NUTRIENT_WIRE:
            arr = np.asarray(future.get(wire, np.zeros(future_len)), dtype=float)
            if arr.shape != (future_len,):
                raise HttpError(422, f"future.{wire} must hold {future_len} values")
            arr = arr.copy()
            arr[0] += meal_values[wire]  # the described meal lands in the next slot
            nutrients_future[WIRE_CHANNELS[wire]] = arr
        future_drugs = np.asarray(future.get("drug_g", np.zeros(future_len)), dtype=float)
        projected_basal = np.asarray(
            future.get("basal_iu", np.full(future_len, float(history["basal_insulin"][-1]))),
            dtype=float,
        )

        ctx = PlanningContext(
            patient_id=pid,
            profile=profile,
            history=history,
            basal_24h=basal_24h,
            future_nutrients=nutrients_future,
            future_drugs=future_drugs,
            projected_basal=projected_basal,
            target_glucose=np.asarray(body["target_glucose_mg_dl"], dtype=float),
        )

        plan = self.runtime.plan(ctx)
        audit = GuardAudit()
        guard_ctx = RetitrationContext(
            current_glucose_mg_dl=[float(v) for v in history["glucose"][-8:]],
            recent_meals=meal.text,
            candidate=plan,
            predicted_trace=None,
            risk=None,
        )
        final = guard(
            plan,
            self.runtime.forecaster_for(ctx),
            self.backend,
            guard_ctx,
            max_iters=self.max_iters,
            audit=audit,
        )
        last = audit.iterations[-1] if audit.iterations else None
        record = {
            "session_id": "",
            "patient_id": pid,
            "created_at": _now(),
            "disclaimer": DISCLAIMER,
            "meal_text": meal.text,
            "nutrients": dict(estimate.to_dict(), note=nutrient_note),
            "target_glucose_mg_dl": [float(v) for v in np.atleast_1d(ctx.target_glucose)],
            "plan": {
                "doses_iu": [float(d) for d in final.doses_iu],
                "safety_status": final.safety_status,
                "retitration_count": final.retitration_count,
            },
            "forecast": {"glucose_mg_dl": last.trace_mg_dl if last else []},
            "risk": {
                "is_safe": final.safety_status == STATUS_SAFE,
                "events": last.events if last else [],
            },
            "audit": audit.to_list(),
        }
        record["session_id"] = self.store.create_session(record)
        return 200, record

    def get_session(self, _body, sid: str):
        return 200, self.store.get_session(sid)


class _ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True


def serve(app: App, host: str = "127.0.0.1", port: int = 8040):
    server = make_server(host, port, app, server_class=_ThreadingWSGIServer)
    logger.info("serving on http://%s:%d", host, port)
    return server
