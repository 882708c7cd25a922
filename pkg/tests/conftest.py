import asyncio
import threading
from pathlib import Path

import pytest

from gridmesh.client import Binding
from gridmesh.server import Server

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "gridmesh" / "fixtures"


class ServerThread:
    """A broker running on its own event loop in a background thread."""

    def __init__(self, ipc_path=None, ws=False):
        self.server = Server()
        self.loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        self._call(self.server.bind_tcp("127.0.0.1", 0))
        if ipc_path:
            self._call(self.server.bind_ipc(str(ipc_path)))
        if ws:
            self._call(self.server.bind_ws("127.0.0.1", 0))
        self.ipc_path = ipc_path

    def _run(self):
        asyncio.set_event_loop(self.loop)
        self.loop.run_forever()

    def _call(self, coro, timeout=10.0):
        return asyncio.run_coroutine_threadsafe(coro, self.loop).result(timeout)

    @property
    def tcp_binding(self):
        return Binding("tcp", f"127.0.0.1:{self.server.tcp_port}")

    @property
    def ws_binding(self):
        return Binding("websocket", f"127.0.0.1:{self.server.ws_port}")

    @property
    def ipc_binding(self):
        return Binding("ipc", str(self.ipc_path))

    def session_count(self):
        return self._call(self._count())

    async def _count(self):
        return len(self.server.broker.sessions)

    def stop(self):
        self._call(self.server.close())
        self.loop.call_soon_threadsafe(self.loop.stop)
        self._thread.join(5.0)
        self.loop.close()


@pytest.fixture
def srv():
    s = ServerThread()
    yield s
    s.stop()


@pytest.fixture
def srv_all(tmp_path):
    s = ServerThread(ipc_path=tmp_path / "gridmesh.sock", ws=True)
    yield s
    s.stop()


@pytest.fixture
def ieee39_path():
    return FIXTURES / "ieee39.json"


@pytest.fixture
def gas8_path():
    return FIXTURES / "gas8.json"
