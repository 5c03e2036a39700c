"""Shared fixtures: stub HTTP servers, store/config factories, data builders."""

from __future__ import annotations

import json
import threading
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from roadhealth.config import Config
from roadhealth.store import Store

FROZEN_NOW = "2025-08-13T12:00:00Z"


class StubServer:
    """Scriptable localhost HTTP server for routing/webhook stand-ins.

    Responses are served from a FIFO queue; when it runs dry the default
    response is used. Every request is recorded as (method, path, body,
    headers).
    """

    def __init__(self):
        self.requests: list[tuple[str, str, bytes, dict]] = []
        self.queue: list[tuple[int, dict]] = []
        self.default: tuple[int, dict] = (200, {"ok": True})
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def _respond(self):
                length = int(self.headers.get("content-length") or 0)
                body = self.rfile.read(length) if length else b""
                stub.requests.append(
                    (self.command, self.path, body, {k.lower(): v for k, v in self.headers.items()})
                )
                status, payload = stub.queue.pop(0) if stub.queue else stub.default
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            do_GET = _respond
            do_POST = _respond

            def log_message(self, *args):
                pass

        self._server = HTTPServer(("127.0.0.1", 0), Handler)
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.stop()


@pytest.fixture
def webhook(stub_server):
    return stub_server


@pytest.fixture
def make_config(tmp_path):
    def _make(**overrides) -> Config:
        defaults = dict(
            store_path=str(tmp_path / "test.db"),
            fixed_now=FROZEN_NOW,
            authority_contacts=["authority@example.test"],
            escalation_contacts=["chief@example.test"],
            dispatch_backoff_s=0.001,
        )
        defaults.update(overrides)
        return Config(**defaults)

    return _make


@pytest.fixture
def config(make_config) -> Config:
    return make_config()


@pytest.fixture
def store(config):
    s = Store(config.store_path, now_fn=config.now)
    yield s
    s.close()


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def gps_csv(fixes: list[tuple[datetime, float, float]]) -> str:
    """Render (utc, lat, lon) rows as the GPS log interchange format."""
    lines = ["utc_iso,lat,lon"]
    for at, lat, lon in fixes:
        stamp = at.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")
        lines.append(f"{stamp},{lat:.6f},{lon:.6f}")
    return "\n".join(lines) + "\n"


def straight_track(
    start: datetime,
    seconds: int,
    lat0: float,
    lon0: float,
    dlat_per_s: float = 0.0,
    dlon_per_s: float = 0.0,
) -> str:
    fixes = [
        (start + timedelta(seconds=i), lat0 + i * dlat_per_s, lon0 + i * dlon_per_s)
        for i in range(seconds + 1)
    ]
    return gps_csv(fixes)


def detections_jsonl(frames: list[dict]) -> str:
    return "\n".join(json.dumps(f) for f in frames) + "\n"


def frame(
    frame_id: int,
    text: str,
    boxes: list[dict] | None = None,
    frame_w: int = 1920,
    frame_h: int = 1080,
    thumbnail: str | None = None,
) -> dict:
    out = {
        "frame_id": frame_id,
        "raw_timestamp_text": text,
        "frame_w": frame_w,
        "frame_h": frame_h,
        "boxes": boxes if boxes is not None else [],
    }
    if thumbnail is not None:
        out["thumbnail"] = thumbnail
    return out


def box(x=10, y=10, w=200, h=120, confidence=0.9) -> dict:
    return {"x": x, "y": y, "w": w, "h": h, "confidence": confidence}
