"""Shared fixtures: a live gateway served from a temp store."""

from __future__ import annotations

import threading
import time

import pytest
import uvicorn
from hypothesis import settings

from driftwatch.gateway import create_app

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


class GatewayHandle:
    """A gateway running in a background thread, restartable on one store."""

    def __init__(self, store_path):
        self.store_path = store_path
        self._server = None
        self._thread = None
        self.base_url = ""
        self.app = None

    def start(self) -> "GatewayHandle":
        self.app = create_app(str(self.store_path))
        config = uvicorn.Config(
            self.app, host="127.0.0.1", port=0, log_level="warning"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.monotonic() + 10.0
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("gateway did not start in time")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"
        return self

    @property
    def state(self):
        return self.app.state.gateway

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
            self._thread.join(timeout=10)
            self._server = None
            self._thread = None

    def restart(self) -> "GatewayHandle":
        self.stop()
        return self.start()


@pytest.fixture
def gateway(tmp_path):
    handle = GatewayHandle(tmp_path / "store.jsonl").start()
    yield handle
    handle.stop()
