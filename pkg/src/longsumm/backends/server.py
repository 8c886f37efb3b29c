"""Minimal wire-protocol server wrapping an in-process backend.

Serves any object with the backend surface (``list_models``,
``count_tokens``, ``embed``, ``generate_text``) over the /v1 protocol.
Used by the test suite to exercise the HTTP client hermetically; also handy
as a stand-in service during development.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from longsumm.backends.errors import UnknownModelError

__all__ = ["MockWireServer"]


class _Handler(BaseHTTPRequestHandler):
    backend = None
    server_state = None

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_json(self) -> dict | None:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            self._send(422, {"error": "request body is not valid JSON"})
            return None
        if not isinstance(body, dict):
            self._send(422, {"error": "request body must be a JSON object"})
            return None
        return body

    def _inject_failure(self) -> bool:
        if self.server_state.pop_failure():
            self._send(500, {"error": "injected failure"})
            return True
        return False

    def do_GET(self) -> None:  # noqa: N802 - stdlib naming
        if self.path != "/v1/models":
            self._send(404, {"error": f"no such endpoint: {self.path}"})
            return
        if self._inject_failure():
            return
        profiles = [p.to_dict() for p in self.backend.list_models()]
        self._send(200, {"profiles": profiles})

    def do_POST(self) -> None:  # noqa: N802 - stdlib naming
        if self.path == "/v1/score":
            self._send(501, {"error": "reserved endpoint, not implemented"})
            return
        if self.path not in ("/v1/count_tokens", "/v1/embed", "/v1/generate"):
            self._send(404, {"error": f"no such endpoint: {self.path}"})
            return
        if self._inject_failure():
            return
        body = self._read_json()
        if body is None:
            return
        try:
            if self.path == "/v1/count_tokens":
                self._count(body)
            elif self.path == "/v1/embed":
                self._embed(body)
            else:
                self._generate(body)
        except UnknownModelError as exc:
            self._send(
                404, {"error": f"unknown model {exc.model_id!r}", "available_models": exc.available}
            )
        except (KeyError, TypeError, ValueError) as exc:
            self._send(422, {"error": str(exc)})

    def _count(self, body: dict) -> None:
        model = body["model"]
        text = body["text"]
        if not isinstance(text, str):
            raise TypeError("'text' must be a string")
        self._send(200, {"count": self.backend.count_tokens(model, text)})

    def _embed(self, body: dict) -> None:
        model = body["model"]
        texts = body["texts"]
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise TypeError("'texts' must be a list of strings")
        vectors = self.backend.embed(model, texts)
        dim = len(vectors[0]) if vectors else 0
        self._send(200, {"vectors": vectors, "dim": dim})

    def _generate(self, body: dict) -> None:
        model = body["model"]
        prompt = body["prompt"]
        max_new_tokens = body.get("max_new_tokens", 1500)
        if not isinstance(prompt, str):
            raise TypeError("'prompt' must be a string")
        if not isinstance(max_new_tokens, int) or max_new_tokens < 1:
            raise ValueError("'max_new_tokens' must be a positive integer")
        self._send(200, {"text": self.backend.generate_text(model, prompt, max_new_tokens)})


class MockWireServer:
    """Threaded HTTP server exposing a backend over the /v1 protocol."""

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0):
        self.backend = backend
        self._failures = 0
        self._failure_lock = threading.Lock()
        handler = type("BoundHandler", (_Handler,), {"backend": backend, "server_state": self})
        self._server = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def pop_failure(self) -> bool:
        with self._failure_lock:
            if self._failures > 0:
                self._failures -= 1
                return True
            return False

    def inject_failures(self, n: int) -> None:
        """Make the next ``n`` requests fail with HTTP 500 (for retry tests)."""
        with self._failure_lock:
            self._failures = n

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockWireServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockWireServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()
