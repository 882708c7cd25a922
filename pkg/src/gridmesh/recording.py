"""Stream recording file: "DREC", version, then timestamped payload records.

Each record is the NamedValues batch one sync delivered, stamped with
the stream timestamp ("ts" variable when present, else the previous
record's stamp).  Replaying a recording republishes the payload bytes
verbatim, so record -> replay -> record preserves them exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"DREC"
VERSION = 1

_HEAD = struct.Struct("<4sI")
_REC = struct.Struct("<dI")


class RecordingError(Exception):
    pass


@dataclass(frozen=True)
class Record:
    ts: float
    payload: bytes  # encoded NamedValues


class RecordingWriter:
    def __init__(self, fh):
        self._fh = fh
        self._last_ts = 0.0
        fh.write(_HEAD.pack(MAGIC, VERSION))

    def append(self, ts: float | None, payload: bytes) -> None:
        if ts is None:
            ts = self._last_ts
        if ts < self._last_ts:
            raise RecordingError("timestamps must be non-decreasing")
        self._last_ts = ts
        self._fh.write(_REC.pack(ts, len(payload)))
        self._fh.write(payload)


def read_recording(data: bytes) -> list[Record]:
    if len(data) < _HEAD.size:
        raise RecordingError("truncated header")
    magic, version = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise RecordingError(f"bad magic {magic!r}")
    if version != VERSION:
        raise RecordingError(f"unsupported version {version}")
    pos = _HEAD.size
    records = []
    last = None
    while pos < len(data):
        if pos + _REC.size > len(data):
            raise RecordingError("truncated record header")
        ts, n = _REC.unpack_from(data, pos)
        pos += _REC.size
        if pos + n > len(data):
            raise RecordingError("truncated record payload")
        if last is not None and ts < last:
            raise RecordingError("timestamps decrease")
        last = ts
        records.append(Record(ts, data[pos : pos + n]))
        pos += n
    return records
