"""HTTP suggestion service.

GET /suggest?prefix=<urlencoded>&n=<int>&model=<lm|mpc> returns ranked
candidates as JSON; GET /health reports model metadata. Request handling is
concurrent; loaded models are immutable, so requests share them freely.

The request logic lives on SuggestService as plain methods returning
(status, payload) pairs so it can be tested without sockets; the HTTP layer
is a thin stdlib wrapper.
"""

from __future__ import annotations

import json
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .bundle import ModelBundle, load_bundle
from .corpus import normalize_prefix

MAX_PREFIX_CHARS = 100

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
}


class SuggestService:
    def __init__(self, bundle: ModelBundle | None = None, ui_dir=None):
        self.bundle = bundle
        self.ui_dir = Path(ui_dir) if ui_dir else None

    def load(self, model_dir) -> None:
        self.bundle = load_bundle(model_dir)

    # -- request handlers (pure; no socket involvement) --------------------

    def handle_suggest(self, params: dict) -> tuple[int, dict]:
        if self.bundle is None:
            return 503, {"error": "models not loaded"}
        raw_prefix = params.get("prefix", [""])[0]
        if not raw_prefix:
            return 400, {"error": "missing or empty prefix"}
        if len(raw_prefix) > MAX_PREFIX_CHARS:
            return 400, {"error": f"prefix longer than {MAX_PREFIX_CHARS} characters"}
        engine = params.get("model", ["lm"])[0]
        if engine not in ("lm", "mpc"):
            return 400, {"error": f"unknown model {engine!r}"}
        cfg = self.bundle.decode_config()
        try:
            n = int(params.get("n", [str(cfg.num_candidates)])[0])
        except ValueError:
            return 400, {"error": "n must be an integer"}
        if n < 1 or n > cfg.beam_width:
            return 400, {"error": f"n must satisfy 1 <= n <= beam width ({cfg.beam_width})"}
        prefix = normalize_prefix(raw_prefix)
        if not prefix:
            return 400, {"error": "prefix is empty after normalization"}
        completer = self.bundle.completer(engine, n=n)
        t0 = time.perf_counter()
        cands = completer(prefix)
        latency_ms = (time.perf_counter() - t0) * 1000.0
        return 200, {
            "prefix": raw_prefix,
            "normalized_prefix": prefix,
            "model": engine,
            "candidates": [
                {"query": c.query, "score": c.score, "rank": i}
                for i, c in enumerate(cands, start=1)
            ],
            "latency_ms": latency_ms,
        }

    def handle_health(self) -> tuple[int, dict]:
        if self.bundle is None:
            return 503, {"error": "models not loaded"}
        return 200, {"status": "ok", "models": self.bundle.describe()}


class _Handler(BaseHTTPRequestHandler):
    service: SuggestService = None  # set by make_server

    def do_GET(self):  # noqa: N802 (stdlib naming)
        url = urlsplit(self.path)
        params = parse_qs(url.query)
        if url.path == "/suggest":
            status, payload = self.service.handle_suggest(params)
            self._send_json(status, payload)
        elif url.path == "/health":
            status, payload = self.service.handle_health()
            self._send_json(status, payload)
        elif self.service.ui_dir is not None:
            self._send_static(url.path)
        else:
            self._send_json(404, {"error": "not found"})

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_static(self, path: str) -> None:
        rel = "index.html" if path == "/" else path.lstrip("/")
        target = (self.service.ui_dir / rel).resolve()
        try:
            target.relative_to(self.service.ui_dir.resolve())
        except ValueError:
            self._send_json(404, {"error": "not found"})
            return
        if not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):  # silence default stderr chatter
        pass


def make_server(service: SuggestService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    return server
