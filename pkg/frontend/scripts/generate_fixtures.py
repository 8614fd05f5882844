"""Regenerate the test fixtures from the service itself.

Run from the repository root with the package installed:

    python frontend/scripts/generate_fixtures.py

The risk-parity fixture is classified by the service's own detector, so
the client test proves band parity against the real rule, not a copy of
it. The session fixtures are live captures from the stub-backed service.
"""
import json
import pathlib
import sys
import tempfile

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from glucoplan.forecast import GlucoseTrace
from glucoplan.nutrition import ScriptedBackend
from glucoplan.safety import detect_risk
from glucoplan.service import App, FileStore

from test_service import NUTRIENTS, StubRuntime, profile_body, session_body
from wsgi_client import Client

OUT = ROOT / "frontend" / "tests" / "fixtures"


def risk_parity(count: int = 100) -> None:
    rng = np.random.default_rng(424242)
    cases = []
    for _ in range(count):
        values = np.round(rng.uniform(40.0, 260.0, size=8), 2)
        if rng.random() < 0.3:
            values[rng.integers(8)] = float(rng.choice([70.0, 180.0, 69.99, 180.01]))
        risk = detect_risk(GlucoseTrace(values))
        kinds = ["ok"] * 8
        for event in risk.events:
            kinds[event.slot] = event.kind
        cases.append(
            {"trace_mg_dl": [float(v) for v in values], "kinds": kinds, "is_safe": risk.is_safe}
        )
    (OUT / "risk_parity.json").write_text(json.dumps(cases, indent=1))


def capture(traces, responses, name: str) -> dict:
    with tempfile.TemporaryDirectory() as td:
        app = App(
            FileStore(pathlib.Path(td) / "store"),
            StubRuntime([list(t) for t in traces]),
            ScriptedBackend(list(responses)),
        )
        client = Client(app)
        client.post("/patients", profile_body("alice"))
        status, record = client.post("/sessions", session_body("alice"))
        assert status == 200, record
        (OUT / name).write_text(json.dumps(record, indent=1))
        return record


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    risk_parity()
    capture(
        [(118.0, 122.0, 131.0, 140.0, 149.0, 155.0, 158.0, 160.0)],
        [NUTRIENTS],
        "safe_session.json",
    )
    revision = "doses_iu: 1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.2"
    capture(
        [(250.0, 240.0, 230.0, 220.0, 210.0, 205.0, 200.0, 195.0)],
        (NUTRIENTS,) + (revision,) * 8,
        "flagged_session.json",
    )
    print(f"fixtures written to {OUT}")
