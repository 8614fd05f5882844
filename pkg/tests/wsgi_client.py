"""Minimal in-process WSGI test client."""
from __future__ import annotations

import io
import json


class Client:
    def __init__(self, app):
        self.app = app

    def request(self, method: str, path: str, body: dict | None = None):
        raw = json.dumps(body or {}).encode("utf-8")
        environ = {
            "REQUEST_METHOD": method,
            "PATH_INFO": path,
            "CONTENT_LENGTH": str(len(raw)),
            "wsgi.input": io.BytesIO(raw),
        }
        captured = {}

        def start_response(status, headers):
            captured["status"] = int(status.split()[0])
            captured["headers"] = dict(headers)

        chunks = self.app(environ, start_response)
        payload = b"".join(chunks)
        if captured["headers"].get("Content-Type") == "application/json":
            return captured["status"], json.loads(payload.decode("utf-8"))
        return captured["status"], payload

    def get(self, path):
        return self.request("GET", path)

    def post(self, path, body):
        return self.request("POST", path, body)

    def put(self, path, body):
        return self.request("PUT", path, body)
