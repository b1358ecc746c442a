from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from voxsynth.stubs import start_stub_server


@pytest.fixture(scope="session")
def stub_url():
    """Base URL of the packaged deterministic model stubs."""
    server, url = start_stub_server()
    yield url
    server.shutdown()


class ScriptedHandler(BaseHTTPRequestHandler):
    """POST handler driven by a script of (status, payload) replies.

    The script is consumed once per request; after it runs out the last
    entry repeats. Tracks request and concurrency counts for assertions.
    """

    script: list[tuple[int, dict]] = [(200, {})]
    delay: float = 0.0
    requests_seen = 0
    in_flight = 0
    max_in_flight = 0
    _lock = threading.Lock()

    @classmethod
    def reset(cls, script, delay: float = 0.0):
        cls.script = list(script)
        cls.delay = delay
        cls.requests_seen = 0
        cls.in_flight = 0
        cls.max_in_flight = 0

    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        cls = type(self)
        with cls._lock:
            cls.in_flight += 1
            cls.max_in_flight = max(cls.max_in_flight, cls.in_flight)
            index = min(cls.requests_seen, len(cls.script) - 1)
            cls.requests_seen += 1
        try:
            if cls.delay:
                time.sleep(cls.delay)
            status, payload = cls.script[index]
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("content-type", "application/json")
            self.send_header("content-length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        finally:
            with cls._lock:
                cls.in_flight -= 1


@pytest.fixture
def scripted_server():
    """A throwaway HTTP server whose responses follow a per-test script."""

    class Handler(ScriptedHandler):
        script = [(200, {})]
        delay = 0.0
        requests_seen = 0
        in_flight = 0
        max_in_flight = 0
        _lock = threading.Lock()

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield Handler, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def pytest_runtest_logreport(report):
    """Print one PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {status}")
