"""Language-model backends behind one tiny interface.

A backend is anything with a ``name`` and ``complete(prompt) -> text``.
Three implementations cover the deployment spectrum: a scripted double for
tests and demos, an offline adapter that answers from the bundled nutrient
table (so the whole system runs without network access), and a generic
HTTP adapter for chat-completions-style providers.
"""
from __future__ import annotations

import json
import os
import urllib.request
from pathlib import Path
from typing import Protocol, Sequence

from ..errors import BackendUnavailable
from .parse import render_estimate
from .prompt import extract_meal_text
from .table import NutrientTable, offline_estimate
from .types import MealDescription


class LlmBackend(Protocol):
    name: str

    def complete(self, prompt: str) -> str: ...


class ScriptedBackend:
    """Deterministic test double: replays canned responses in order.

    The last response repeats once the script is exhausted; an empty script
    raises BackendUnavailable on every call.
    """

    def __init__(self, responses: Sequence[str], name: str = "scripted"):
        self.name = name
        self.responses = list(responses)
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if not self.responses:
            raise BackendUnavailable(f"backend {self.name!r} has no responses")
        idx = min(len(self.calls) - 1, len(self.responses) - 1)
        return self.responses[idx]

    @property
    def call_count(self) -> int:
        return len(self.calls)


class OfflineBackend:
    """Answers nutrition prompts from the local table; never needs network."""

    name = "offline-table"

    def __init__(self, table: NutrientTable | None = None):
        self.table = table or NutrientTable.bundled()

    def complete(self, prompt: str) -> str:
        meal = MealDescription(text=extract_meal_text(prompt))
        return render_estimate(offline_estimate(meal, self.table))


class HttpBackend:
    """Chat-completions adapter for OpenAI-compatible endpoints.

    Sampling is pinned to temperature 0: response variance is a defect for
    this task, not a feature.
    """

    def __init__(self, endpoint: str, model: str, api_key_env: str = "",
                 timeout_s: float = 30.0, name: str = ""):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.name = name or f"http:{model}"

    def complete(self, prompt: str) -> str:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if not key:
                raise BackendUnavailable(f"env var {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        request = urllib.request.Request(
            self.endpoint, data=json.dumps(body).encode(), headers=headers
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode())
        except Exception as exc:
            raise BackendUnavailable(f"backend {self.name} unreachable: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError) as exc:
            raise BackendUnavailable(f"backend {self.name}: unexpected payload") from exc


def backend_from_config(path: str | Path) -> LlmBackend:
    """Build a backend from a JSON config file.

    Fields: provider (offline | scripted | openai_compat), and for HTTP
    providers endpoint, model, api_key_env, timeout_s, max_retries.
    """
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    provider = cfg.get("provider", "offline")
    if provider == "offline":
        table = NutrientTable.from_csv(cfg["table"]) if cfg.get("table") else None
        return OfflineBackend(table)
    if provider == "scripted":
        return ScriptedBackend(cfg.get("responses", []), name=cfg.get("name", "scripted"))
    if provider == "openai_compat":
        return HttpBackend(
            endpoint=cfg["endpoint"],
            model=cfg["model"],
            api_key_env=cfg.get("api_key_env", ""),
            timeout_s=float(cfg.get("timeout_s", 30.0)),
            name=cfg.get("name", ""),
        )
    raise BackendUnavailable(f"unknown backend provider {provider!r}")
