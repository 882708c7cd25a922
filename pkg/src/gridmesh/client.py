"""Blocking client: workspace plus the join/send/broadcast/sync call family.

A ClientHandle owns one connection and a local variable workspace.
send()/broadcast() transmit workspace variables by name; the *_r
variants transmit an explicit (name, value) without touching the
workspace; sync() merges pending peer updates into the workspace while
sync_r() just returns them.  One request is in flight at a time, so
replies need no correlation ids.
"""

from __future__ import annotations

import socket

from . import frames
from .frames import Frame
from .server import PROTO_VERSION
from .values import Value, check_names


class ClientError(Exception):
    pass


class ConnectFailed(ClientError):
    pass


class ProtocolMismatch(ClientError):
    pass


class NameNotInWorkspace(ClientError):
    pass


class UnknownGroup(ClientError):
    def __init__(self, groups):
        super().__init__(f"unknown groups: {groups}")
        self.groups = list(groups)


class ServerError(ClientError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


class Binding:
    """Transport endpoint: tcp host:port, ipc path, or websocket host:port."""

    __slots__ = ("kind", "address")

    def __init__(self, kind: str, address: str):
        if kind not in ("tcp", "ipc", "websocket"):
            raise ValueError(f"unknown transport kind {kind!r}")
        self.kind = kind
        self.address = address

    def __repr__(self):
        return f"Binding({self.kind!r}, {self.address!r})"


def _split_hostport(address: str) -> tuple[str, int]:
    host, _, port = address.rpartition(":")
    return host, int(port)


class _StreamTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send_bytes(self, data: bytes) -> None:
        self.sock.sendall(data)

    def _recv_exactly(self, n: int) -> bytes:
        chunks = []
        got = 0
        while got < n:
            chunk = self.sock.recv(min(n - got, 1 << 22))
            if not chunk:
                raise ConnectionError("peer closed")
            chunks.append(chunk)
            got += len(chunk)
        return b"".join(chunks)

    def recv_frame(self) -> Frame:
        return frames.read_frame_blocking(self._recv_exactly)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _WsTransport:
    def __init__(self, url: str):
        from websockets.sync.client import connect

        self.ws = connect(url, max_size=None)

    def send_bytes(self, data: bytes) -> None:
        self.ws.send(data)

    def recv_frame(self) -> Frame:
        msg = self.ws.recv()
        if isinstance(msg, str):
            raise frames.MalformedHeader("text message on binary protocol")
        return frames.decode_frame_bytes(msg)

    def close(self) -> None:
        try:
            self.ws.close()
        except Exception:
            pass


def _open_transport(binding: Binding, timeout: float | None):
    try:
        if binding.kind == "tcp":
            host, port = _split_hostport(binding.address)
            return _StreamTransport(socket.create_connection((host, port), timeout))
        if binding.kind == "ipc":
            sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
            if timeout is not None:
                sock.settimeout(timeout)
            sock.connect(binding.address)
            return _StreamTransport(sock)
        return _WsTransport(f"ws://{binding.address}")
    except (OSError, ConnectionError) as e:
        raise ConnectFailed(f"cannot connect to {binding}: {e}") from e


class ClientHandle:
    """Single-owner connection; concurrent calls on one handle are a bug."""

    def __init__(self, transport, session_id: int):
        self._tp = transport
        self.session_id = session_id
        self.workspace: dict[str, Value] = {}
        self.joined: set[str] = set()
        self._closed = False

    # -- plumbing -----------------------------------------------------------

    def _request(self, f: Frame) -> Frame:
        if self._closed:
            raise ClientError("handle is closed")
        self._tp.send_bytes(frames.encode_frame(f))
        reply = self._tp.recv_frame()
        if reply.cmd == "err":
            code = reply.headers.get("code", "error")
            if code == "unknown_group":
                raise UnknownGroup(reply.headers.get("groups", []))
            raise ServerError(code, reply.headers.get("message", ""))
        return reply

    # -- API ----------------------------------------------------------------

    def join(self, groups: list[str]) -> None:
        self._request(Frame("join", {"groups": list(groups)}))
        self.joined.update(groups)

    def leave(self, groups: list[str]) -> None:
        self._request(Frame("leave", {"groups": list(groups)}))
        self.joined.difference_update(groups)

    def send(self, groups: list[str], names: list[str]) -> None:
        missing = [n for n in names if n not in self.workspace]
        if missing:
            raise NameNotInWorkspace(f"not in workspace: {missing}")
        if not names:
            return
        payload = [(n, self.workspace[n]) for n in names]
        self._request(Frame("send", {"groups": list(groups)}, payload))

    def send_r(self, groups: list[str], name: str, value: Value) -> None:
        self._request(Frame("send", {"groups": list(groups)}, [(name, value)]))

    def send_pairs(self, groups: list[str], pairs) -> None:
        pairs = list(pairs)
        check_names(pairs)
        self._request(Frame("send", {"groups": list(groups)}, pairs))

    def broadcast(self, names: list[str]) -> None:
        missing = [n for n in names if n not in self.workspace]
        if missing:
            raise NameNotInWorkspace(f"not in workspace: {missing}")
        if not names:
            return
        payload = [(n, self.workspace[n]) for n in names]
        self._request(Frame("broadcast", {}, payload))

    def broadcast_r(self, name: str, value: Value) -> None:
        self._request(Frame("broadcast", {}, [(name, value)]))

    def sync(self, max_n: int = -1) -> int:
        reply = self._request(Frame("sync", {"n": max_n}))
        for name, value in reply.payload:
            self.workspace[name] = value
        return len(reply.payload)

    def sync_r(self, max_n: int = -1) -> list[tuple[str, Value]]:
        reply = self._request(Frame("sync", {"n": max_n}))
        return reply.payload

    def wait(self, timeout_ms: int = -1) -> bool:
        reply = self._request(Frame("wait", {"timeout_ms": timeout_ms}))
        return bool(reply.headers.get("pending"))

    def list_groups(self) -> list[tuple[str, int, int]]:
        reply = self._request(Frame("list"))
        out = []
        for name, v in reply.payload:
            members, writes = v.items
            out.append((name, members.v, writes.v))
        return out

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._tp.send_bytes(frames.encode_frame(Frame("bye")))
        except Exception:
            pass
        self._tp.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(
    binding: Binding, timeout: float | None = 10.0, proto: int = PROTO_VERSION
) -> ClientHandle:
    """Open a connection and complete the hello/ok handshake."""
    tp = _open_transport(binding, timeout)
    try:
        tp.send_bytes(frames.encode_frame(Frame("hello", {"proto": proto})))
        reply = tp.recv_frame()
    except (OSError, ConnectionError, EOFError) as e:
        tp.close()
        raise ConnectFailed(str(e)) from e
    if reply.cmd == "err":
        tp.close()
        raise ProtocolMismatch(reply.headers.get("message", "handshake rejected"))
    if reply.cmd != "ok":
        tp.close()
        raise ClientError(f"unexpected handshake reply {reply.cmd}")
    if isinstance(tp, _StreamTransport):
        tp.sock.settimeout(None)  # connect timeout only; waits may block long
    return ClientHandle(tp, reply.headers.get("session", 0))
