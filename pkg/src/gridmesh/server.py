"""Shared-workspace broker.

Clients join named groups; each group owns a variable table mapping a
name to its latest value, a per-group sequence number, and the writing
client.  send() writes to named tables, broadcast() to all of them, and
sync() delivers entries written since the client's per-group cursor,
excluding its own writes.  Commands are applied one at a time on a
single event loop, so observable state is a total order consistent with
per-connection arrival order; I/O is concurrent across TCP, local IPC
sockets, and websockets.
"""

from __future__ import annotations

import asyncio
import logging

from . import frames
from .frames import Frame
from .values import MalformedValue, Value, check_names

log = logging.getLogger("gridmesh.server")

PROTO_VERSION = 1

MAX_SESSIONS = 4096
MAX_GROUPS = 1024
MAX_VARS_PER_GROUP = 65536


class Entry:
    __slots__ = ("value", "seq", "author")

    def __init__(self, value: Value, seq: int, author: int):
        self.value = value
        self.seq = seq
        self.author = author


class Group:
    __slots__ = ("name", "entries", "next_seq", "members")

    def __init__(self, name: str):
        self.name = name
        self.entries: dict[str, Entry] = {}
        self.next_seq = 1
        self.members: set[Session] = set()


class Session:
    __slots__ = ("id", "memberships", "cursors", "wake", "send_frame", "closed")

    def __init__(self, sid: int, send_frame):
        self.id = sid
        self.memberships: set[str] = set()
        self.cursors: dict[str, int] = {}
        self.wake: asyncio.Event | None = None  # set while a wait is parked
        self.send_frame = send_frame
        self.closed = False


class Broker:
    """Transport-independent state machine; one instance per server."""

    def __init__(self, max_sessions: int = MAX_SESSIONS):
        self.groups: dict[str, Group] = {}
        self.sessions: dict[int, Session] = {}
        self.max_sessions = max_sessions
        self._next_sid = 1

    # -- session lifecycle --------------------------------------------------

    def open_session(self, send_frame) -> Session | None:
        if len(self.sessions) >= self.max_sessions:
            return None
        s = Session(self._next_sid, send_frame)
        self._next_sid += 1
        self.sessions[s.id] = s
        return s

    def close_session(self, s: Session) -> None:
        if s.closed:
            return
        s.closed = True
        self._leave(s, list(s.memberships))
        self.sessions.pop(s.id, None)
        if s.wake is not None:
            s.wake.set()  # parked wait resolves; handler sees closed flag

    # -- command handlers ---------------------------------------------------

    def handle_join(self, s: Session, groups: list[str]) -> Frame:
        new = [g for g in set(groups) if g not in self.groups]
        if len(self.groups) + len(new) > MAX_GROUPS:
            return _err("limit", "group limit exceeded")
        for name in groups:
            if not name:
                return _err("bad_request", "empty group name")
        for name in groups:
            g = self.groups.get(name)
            if g is None:
                g = self.groups[name] = Group(name)
                log.debug("group %s created", name)
            if s not in g.members:
                g.members.add(s)
                s.memberships.add(name)
                s.cursors[name] = 0
        return Frame("ok")

    def handle_leave(self, s: Session, groups: list[str]) -> Frame:
        self._leave(s, groups)
        return Frame("ok")

    def _leave(self, s: Session, groups: list[str]) -> None:
        for name in groups:
            g = self.groups.get(name)
            if g is None or s not in g.members:
                continue
            g.members.discard(s)
            s.memberships.discard(name)
            s.cursors.pop(name, None)
            if not g.members:
                del self.groups[name]
                log.debug("group %s garbage-collected", name)

    def handle_send(self, s: Session, groups: list[str], payload) -> Frame:
        missing = [g for g in groups if g not in self.groups]
        if missing:
            return _err("unknown_group", "no such group", groups=missing)
        for name in groups:
            g = self.groups[name]
            new = sum(1 for n, _ in payload if n not in g.entries)
            if len(g.entries) + new > MAX_VARS_PER_GROUP:
                return _err("limit", f"variable limit exceeded in group {name}")
        for name in groups:
            self._write(self.groups[name], payload, s.id)
        return Frame("ok")

    def handle_broadcast(self, s: Session, payload) -> Frame:
        for g in self.groups.values():
            new = sum(1 for n, _ in payload if n not in g.entries)
            if len(g.entries) + new > MAX_VARS_PER_GROUP:
                return _err("limit", f"variable limit exceeded in group {g.name}")
        for g in list(self.groups.values()):
            self._write(g, payload, s.id)
        return Frame("ok")

    def _write(self, g: Group, payload, author: int) -> None:
        for name, value in payload:
            g.entries[name] = Entry(value, g.next_seq, author)
            g.next_seq += 1
        if payload:
            for m in g.members:
                if m.wake is not None and self._has_pending(m):
                    m.wake.set()

    def handle_sync(self, s: Session, max_n: int) -> Frame:
        """max_n < 0 means unlimited."""
        selected: dict[str, Value] = {}
        count = 0
        done = False
        for gname in sorted(s.memberships):
            if done:
                break
            g = self.groups[gname]
            cursor = s.cursors[gname]
            pending = sorted(
                (e for e in g.entries.items() if e[1].seq > cursor),
                key=lambda kv: kv[1].seq,
            )
            for name, entry in pending:
                if max_n >= 0 and count >= max_n:
                    done = True
                    break
                s.cursors[gname] = entry.seq
                if entry.author == s.id:
                    continue
                selected[name] = entry.value
                count += 1
        return Frame("sync_reply", payload=list(selected.items()))

    def _has_pending(self, s: Session) -> bool:
        for gname in s.memberships:
            g = self.groups[gname]
            cursor = s.cursors[gname]
            for entry in g.entries.values():
                if entry.seq > cursor and entry.author != s.id:
                    return True
        return False

    async def handle_wait(self, s: Session, timeout_ms: int) -> Frame:
        """timeout_ms < 0 means unlimited. Does not advance cursors."""
        if self._has_pending(s):
            return Frame("notify", {"pending": True})
        if timeout_ms == 0:
            return Frame("notify", {"pending": False})
        s.wake = asyncio.Event()
        try:
            if timeout_ms < 0:
                await s.wake.wait()
            else:
                try:
                    await asyncio.wait_for(s.wake.wait(), timeout_ms / 1000.0)
                except asyncio.TimeoutError:
                    return Frame("notify", {"pending": False})
        finally:
            s.wake = None
        if s.closed:
            return Frame("notify", {"pending": False})
        return Frame("notify", {"pending": self._has_pending(s)})

    def handle_list(self, s: Session) -> Frame:
        from .values import VInt, VList

        payload = []
        for name in sorted(self.groups):
            g = self.groups[name]
            payload.append((name, VList([VInt(len(g.members)), VInt(g.next_seq - 1)])))
        return Frame("list_reply", payload=payload)

    # -- per-connection driver ----------------------------------------------

    async def run_connection(self, recv_frame, send_frame) -> None:
        """Serve one connection: hello handshake then the command loop.

        recv_frame() -> Frame, raising EOFError/ConnectionError at end of
        stream; send_frame(Frame) is an async writer.
        """
        s = None
        try:
            try:
                hello = await recv_frame()
            except (EOFError, ConnectionError, asyncio.IncompleteReadError):
                return
            if hello.cmd != "hello" or hello.headers.get("proto") != PROTO_VERSION:
                await send_frame(_err("proto", "unsupported protocol"))
                return
            s = self.open_session(send_frame)
            if s is None:
                await send_frame(_err("limit", "session limit reached"))
                return
            await send_frame(Frame("ok", {"session": s.id}))
            log.debug("session %d open", s.id)
            while True:
                try:
                    f = await recv_frame()
                except (EOFError, ConnectionError, asyncio.IncompleteReadError):
                    return
                if f.cmd == "bye":
                    return
                reply = await self._dispatch(s, f)
                if s.closed:
                    return
                await send_frame(reply)
        except (frames.FrameError, MalformedValue) as e:
            log.debug("protocol violation, dropping connection: %s", e)
        finally:
            if s is not None:
                self.close_session(s)
                log.debug("session %d closed", s.id)

    async def _dispatch(self, s: Session, f: Frame) -> Frame:
        cmd = f.cmd
        if cmd == "join" or cmd == "leave":
            groups = f.headers.get("groups")
            if not _is_str_list(groups):
                return _err("bad_request", "groups must be a list of strings")
            if cmd == "join":
                return self.handle_join(s, groups)
            return self.handle_leave(s, groups)
        if cmd == "send":
            groups = f.headers.get("groups")
            if not _is_str_list(groups):
                return _err("bad_request", "groups must be a list of strings")
            try:
                check_names(f.payload)
            except Exception:
                return _err("bad_request", "bad payload")
            return self.handle_send(s, groups, f.payload)
        if cmd == "broadcast":
            return self.handle_broadcast(s, f.payload)
        if cmd == "sync":
            n = f.headers.get("n", -1)
            if not isinstance(n, int) or isinstance(n, bool):
                return _err("bad_request", "n must be an integer")
            return self.handle_sync(s, n)
        if cmd == "wait":
            t = f.headers.get("timeout_ms", -1)
            if not isinstance(t, int) or isinstance(t, bool):
                return _err("bad_request", "timeout_ms must be an integer")
            return await self.handle_wait(s, t)
        if cmd == "list":
            return self.handle_list(s)
        return _err("bad_request", f"unexpected command {cmd}")


def _err(code: str, message: str, **extra) -> Frame:
    return Frame("err", {"code": code, "message": message, **extra})


def _is_str_list(v) -> bool:
    return isinstance(v, list) and all(isinstance(x, str) for x in v)


# ---------------------------------------------------------------------------
# Transports


class Server:
    """Binds a Broker to TCP / unix-socket / websocket endpoints."""

    def __init__(self, broker: Broker | None = None):
        self.broker = broker or Broker()
        self._servers = []
        self.tcp_port: int | None = None
        self.ws_port: int | None = None

    async def bind_tcp(self, host: str, port: int) -> None:
        srv = await asyncio.start_server(
            self._stream_conn, host, port, limit=1 << 24
        )
        self.tcp_port = srv.sockets[0].getsockname()[1]
        self._servers.append(srv)
        log.info("tcp listening on %s:%d", host, self.tcp_port)

    async def bind_ipc(self, path: str) -> None:
        srv = await asyncio.start_unix_server(self._stream_conn, path, limit=1 << 24)
        self._servers.append(srv)
        log.info("ipc listening on %s", path)

    async def bind_ws(self, host: str, port: int) -> None:
        import websockets.asyncio.server as ws_server

        srv = await ws_server.serve(self._ws_conn, host, port, max_size=None)
        self.ws_port = next(iter(srv.sockets)).getsockname()[1]
        self._servers.append(srv)
        log.info("websocket listening on %s:%d", host, self.ws_port)

    async def _stream_conn(self, reader, writer):
        async def recv():
            return await frames.read_frame(reader)

        async def send(f: Frame):
            writer.write(frames.encode_frame(f))
            await writer.drain()

        try:
            await self.broker.run_connection(recv, send)
        finally:
            try:
                writer.close()
                await writer.wait_closed()
            except Exception:
                pass

    async def _ws_conn(self, ws):
        async def recv():
            try:
                msg = await ws.recv()
            except Exception as e:
                raise EOFError(str(e))
            if isinstance(msg, str):
                raise frames.MalformedHeader("text message on binary protocol")
            return frames.decode_frame_bytes(msg)

        async def send(f: Frame):
            await ws.send(frames.encode_frame(f))

        await self.broker.run_connection(recv, send)

    async def close(self) -> None:
        for srv in self._servers:
            srv.close()
        for srv in self._servers:
            try:
                await srv.wait_closed()
            except Exception:
                pass
        self._servers.clear()

    async def serve_forever(self) -> None:
        await asyncio.Event().wait()
