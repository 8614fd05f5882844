"""File-backed persistence for patients, sessions, and checkpoint refs.

Desk-scale embedded store: everything is JSON under one root directory,
written atomically (tmp + rename). A global registry lock plus per-patient
locks serialize writers; models themselves are immutable and shared.

Layout:
    <root>/patients/<id>.json     profile version history
    <root>/history/<id>.json      recent glycemic buffer per patient
    <root>/sessions/<sid>.json    full session records incl. guard audit
    <root>/checkpoints.json       registered checkpoint paths (immutable)
"""
from __future__ import annotations

import json
import os
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..errors import GlucoplanError
from ..model.profile import PatientProfile


class NotFound(GlucoplanError):
    pass


class Conflict(GlucoplanError):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _atomic_write(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    os.replace(tmp, path)


class FileStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("patients", "history", "sessions"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._patient_locks: dict[str, threading.Lock] = {}

    def _patient_lock(self, patient_id: str) -> threading.Lock:
        with self._lock:
            return self._patient_locks.setdefault(patient_id, threading.Lock())

    # -- patients -------------------------------------------------------------

    def _patient_path(self, patient_id: str) -> Path:
        safe = "".join(c for c in patient_id if c.isalnum() or c in "-_")
        if safe != patient_id or not safe:
            raise GlucoplanError(f"invalid patient id {patient_id!r}")
        return self.root / "patients" / f"{safe}.json"

    def create_patient(self, profile: PatientProfile, patient_id: Optional[str] = None) -> str:
        profile.encode()  # reject invariant violations before persisting
        patient_id = patient_id or profile.patient_id or f"pt-{uuid.uuid4().hex[:10]}"
        path = self._patient_path(patient_id)
        with self._patient_lock(patient_id):
            if path.exists():
                raise Conflict(f"patient {patient_id!r} already exists")
            profile.patient_id = patient_id
            _atomic_write(
                path,
                {
                    "patient_id": patient_id,
                    "created_at": _now(),
                    "versions": [dict(profile.to_dict(), version=1, updated_at=_now())],
                },
            )
        return patient_id

    def update_patient(self, patient_id: str, profile: PatientProfile) -> int:
        """Append a new immutable profile version; returns the version number."""
        profile.encode()
        path = self._patient_path(patient_id)
        with self._patient_lock(patient_id):
            if not path.exists():
                raise NotFound(f"unknown patient {patient_id!r}")
            doc = json.loads(path.read_text(encoding="utf-8"))
            version = len(doc["versions"]) + 1
            doc["versions"].append(dict(profile.to_dict(), version=version, updated_at=_now()))
            _atomic_write(path, doc)
        return version

    def get_patient(self, patient_id: str) -> PatientProfile:
        doc = self.get_patient_document(patient_id)
        return PatientProfile.from_dict(doc["versions"][-1])

    def get_patient_document(self, patient_id: str) -> dict:
        path = self._patient_path(patient_id)
        if not path.exists():
            raise NotFound(f"unknown patient {patient_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def patient_exists(self, patient_id: str) -> bool:
        try:
            return self._patient_path(patient_id).exists()
        except GlucoplanError:
            return False

    # -- glycemic history buffer ----------------------------------------------

    def put_history(self, patient_id: str, history: dict) -> None:
        if not self.patient_exists(patient_id):
            raise NotFound(f"unknown patient {patient_id!r}")
        with self._patient_lock(patient_id):
            _atomic_write(
                self.root / "history" / f"{patient_id}.json",
                {"patient_id": patient_id, "updated_at": _now(), "history": history},
            )

    def get_history(self, patient_id: str) -> Optional[dict]:
        path = self.root / "history" / f"{patient_id}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["history"]

    # -- sessions ---------------------------------------------------------------

    def create_session(self, record: dict) -> str:
        session_id = record.get("session_id") or f"s-{uuid.uuid4().hex[:12]}"
        record["session_id"] = session_id
        path = self.root / "sessions" / f"{session_id}.json"
        with self._lock:
            if path.exists():
                raise Conflict(f"session {session_id!r} already exists")
            _atomic_write(path, record)
        return session_id

    def get_session(self, session_id: str) -> dict:
        safe = "".join(c for c in session_id if c.isalnum() or c in "-_")
        path = self.root / "sessions" / f"{safe}.json"
        if safe != session_id or not path.exists():
            raise NotFound(f"unknown session {session_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    # -- checkpoint references --------------------------------------------------

    def register_checkpoint(self, scope: str, kind: str, path: str) -> None:
        """Record a checkpoint path for a patient (or "__foundation__").

        Registered references are immutable; replacing one is a new scope
        (e.g. a fresh personalization writes a new file and re-registers
        under a versioned scope).
        """
        reg_path = self.root / "checkpoints.json"
        with self._lock:
            reg = json.loads(reg_path.read_text(encoding="utf-8")) if reg_path.exists() else {}
            slot = reg.setdefault(scope, {})
            if kind in slot:
                raise Conflict(f"checkpoint {scope}/{kind} already registered")
            slot[kind] = {"path": str(path), "registered_at": _now()}
            _atomic_write(reg_path, reg)

    def get_checkpoint(self, scope: str, kind: str) -> Optional[str]:
        reg_path = self.root / "checkpoints.json"
        if not reg_path.exists():
            return None
        reg = json.loads(reg_path.read_text(encoding="utf-8"))
        entry = reg.get(scope, {}).get(kind)
        return entry["path"] if entry else None
