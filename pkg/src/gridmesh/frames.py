"""Command framing shared by the TCP, IPC, and websocket transports.

One frame = magic "DMSG", u32 header length, u32 payload length, header
bytes, payload bytes.  The header is a compact UTF-8 JSON object whose
first key is "cmd"; remaining keys are command parameters and must be
JSON-representable (put bulk data in the payload).  The payload is an
encoded NamedValues block.  Over stream sockets frames are concatenated
on the byte stream; over websockets each frame travels as exactly one
binary message, DMSG prefix included, so bytes are identical on every
transport.
"""

from __future__ import annotations

import json
import struct

from .values import MalformedValue, decode_named_values, encode_named_values_into

MAGIC = b"DMSG"
MAX_HEADER = 64 * 1024
MAX_PAYLOAD = 1024**3

COMMANDS = frozenset(
    {
        "hello",
        "ok",
        "err",
        "join",
        "leave",
        "send",
        "broadcast",
        "sync",
        "sync_reply",
        "wait",
        "notify",
        "list",
        "list_reply",
        "bye",
    }
)

_LENS = struct.Struct("<II")


class FrameError(Exception):
    """Base for framing errors; all are fatal to the connection."""


class BadMagic(FrameError):
    pass


class MalformedHeader(FrameError):
    pass


class OversizeFrame(FrameError):
    pass


class HeaderNotRepresentable(FrameError):
    pass


class Frame:
    """A protocol message: command, JSON-able header map, NamedValues payload."""

    __slots__ = ("cmd", "headers", "payload")

    def __init__(self, cmd: str, headers: dict | None = None, payload=()):
        if cmd not in COMMANDS:
            raise MalformedHeader(f"unknown command {cmd!r}")
        self.cmd = cmd
        self.headers = dict(headers) if headers else {}
        self.payload = list(payload)

    def __eq__(self, other):
        return (
            isinstance(other, Frame)
            and self.cmd == other.cmd
            and self.headers == other.headers
            and self.payload == other.payload
        )

    def __repr__(self):
        return f"Frame({self.cmd!r}, {self.headers!r}, {len(self.payload)} vars)"


def _json_safe(v) -> bool:
    if v is None or isinstance(v, (bool, int, float, str)):
        return True
    if isinstance(v, (list, tuple)):
        return all(_json_safe(x) for x in v)
    if isinstance(v, dict):
        return all(isinstance(k, str) and _json_safe(x) for k, x in v.items())
    return False


def encode_frame(f: Frame) -> bytes:
    for k, v in f.headers.items():
        if not _json_safe(v):
            raise HeaderNotRepresentable(f"header {k!r} has no JSON form")
    header_obj = {"cmd": f.cmd, **f.headers}
    header = json.dumps(header_obj, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )
    if len(header) > MAX_HEADER:
        raise OversizeFrame("header exceeds 64 KiB")
    out = bytearray(MAGIC)
    out.extend(_LENS.pack(len(header), 0))
    out.extend(header)
    body_at = len(out)
    encode_named_values_into(f.payload, out)
    plen = len(out) - body_at
    if plen > MAX_PAYLOAD:
        raise OversizeFrame("payload exceeds 1 GiB")
    out[8:12] = struct.pack("<I", plen)
    return bytes(out)


def parse_frame_body(header: bytes, payload: bytes) -> Frame:
    try:
        obj = json.loads(header.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedHeader(f"header is not valid JSON: {e}") from e
    if not isinstance(obj, dict) or "cmd" not in obj:
        raise MalformedHeader("header missing cmd")
    cmd = obj.pop("cmd")
    if cmd not in COMMANDS:
        raise MalformedHeader(f"unknown command {cmd!r}")
    pairs = decode_named_values(payload)
    return Frame(cmd, obj, pairs)


def decode_frame_bytes(data: bytes) -> Frame:
    """Decode a frame from a complete byte string (one websocket message)."""
    f, used = decode_frame_prefix(data)
    if used != len(data):
        raise MalformedHeader("trailing bytes after frame")
    return f


def decode_frame_prefix(data) -> tuple[Frame, int]:
    """Decode one frame from the front of a buffer; returns (frame, consumed).

    Raises IncompleteFrame if more bytes are needed.
    """
    mv = memoryview(data)
    if len(mv) < 12:
        raise IncompleteFrame(12)
    if mv[:4] != MAGIC:
        raise BadMagic(f"bad magic {bytes(mv[:4])!r}")
    hlen, plen = _LENS.unpack(mv[4:12])
    if hlen > MAX_HEADER:
        raise OversizeFrame("header exceeds 64 KiB")
    if plen > MAX_PAYLOAD:
        raise OversizeFrame("payload exceeds 1 GiB")
    total = 12 + hlen + plen
    if len(mv) < total:
        raise IncompleteFrame(total)
    f = parse_frame_body(
        mv[12 : 12 + hlen].tobytes(), mv[12 + hlen : total].tobytes()
    )
    return f, total


class IncompleteFrame(Exception):
    """Need more bytes; .args[0] is the total length required (if known)."""


async def read_frame(reader) -> Frame:
    """Read exactly one frame from an asyncio StreamReader."""
    head = await reader.readexactly(12)
    if head[:4] != MAGIC:
        raise BadMagic(f"bad magic {head[:4]!r}")
    hlen, plen = _LENS.unpack(head[4:12])
    if hlen > MAX_HEADER:
        raise OversizeFrame("header exceeds 64 KiB")
    if plen > MAX_PAYLOAD:
        raise OversizeFrame("payload exceeds 1 GiB")
    header = await reader.readexactly(hlen)
    payload = await reader.readexactly(plen)
    return parse_frame_body(header, payload)


def read_frame_blocking(recv_exactly) -> Frame:
    """Read one frame given a callable that returns exactly n bytes."""
    head = recv_exactly(12)
    if head[:4] != MAGIC:
        raise BadMagic(f"bad magic {head[:4]!r}")
    hlen, plen = _LENS.unpack(head[4:12])
    if hlen > MAX_HEADER:
        raise OversizeFrame("header exceeds 64 KiB")
    if plen > MAX_PAYLOAD:
        raise OversizeFrame("payload exceeds 1 GiB")
    return parse_frame_body(recv_exactly(hlen), recv_exactly(plen))
