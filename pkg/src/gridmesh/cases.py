"""Grid case files: buses with coordinates, lines, and the streaming
variable convention.

Canonical JSON schema:
    {"name": str,
     "buses": [{"idx": int, "name": str, "lat": float, "lon": float}, ...],
     "lines": [{"idx": int, "from": int, "to": int}, ...]}

CSV intake is a pair of files with headers idx,name,lat,lon (buses) and
idx,from,to (lines).  Unknown JSON fields are ignored.  Producers put a
case on the wire as exactly three variables: topo_bus (N x 3 doubles:
idx, lat, lon), topo_line (M x 2 ints: from, to) and topo_name.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .values import (
    TAG_DOUBLE,
    TAG_INT,
    VArray,
    VStr,
    Value,
)


class CaseError(Exception):
    pass


class SchemaError(CaseError):
    pass


class RangeError(CaseError):
    pass


class RefError(CaseError):
    pass


class DupError(CaseError):
    pass


@dataclass(frozen=True)
class BusRecord:
    idx: int
    name: str
    lat: float
    lon: float


@dataclass(frozen=True)
class LineRecord:
    idx: int
    from_bus: int
    to_bus: int


@dataclass(frozen=True)
class CaseTopology:
    name: str
    buses: tuple[BusRecord, ...]
    lines: tuple[LineRecord, ...]


def _require(obj: dict, key: str, kinds, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, kinds):
        raise SchemaError(f"{where}: field {key!r} has wrong type")
    return v


def _validate(name: str, buses: list[BusRecord], lines: list[LineRecord]) -> CaseTopology:
    if not buses:
        raise SchemaError("case has no buses")
    seen_bus = set()
    for b in buses:
        if b.idx in seen_bus:
            raise DupError(f"duplicate bus idx {b.idx}")
        seen_bus.add(b.idx)
        if not -90.0 <= b.lat <= 90.0:
            raise RangeError(f"bus {b.idx}: lat {b.lat} out of [-90, 90]")
        if not -180.0 <= b.lon <= 180.0:
            raise RangeError(f"bus {b.idx}: lon {b.lon} out of [-180, 180]")
    seen_line = set()
    for ln in lines:
        if ln.idx in seen_line:
            raise DupError(f"duplicate line idx {ln.idx}")
        seen_line.add(ln.idx)
        for end in (ln.from_bus, ln.to_bus):
            if end not in seen_bus:
                raise RefError(f"line {ln.idx}: endpoint {end} not in bus set")
        if ln.from_bus == ln.to_bus:
            raise RefError(f"line {ln.idx}: from == to")
    return CaseTopology(name, tuple(buses), tuple(lines))


def parse_case_json(document: bytes | str) -> CaseTopology:
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object")
    name = _require(obj, "name", str, "case")
    raw_buses = _require(obj, "buses", list, "case")
    raw_lines = obj.get("lines", [])
    if not isinstance(raw_lines, list):
        raise SchemaError("case: field 'lines' has wrong type")
    buses = []
    for i, rb in enumerate(raw_buses):
        if not isinstance(rb, dict):
            raise SchemaError(f"buses[{i}]: not an object")
        buses.append(
            BusRecord(
                idx=_require(rb, "idx", int, f"buses[{i}]"),
                name=_require(rb, "name", str, f"buses[{i}]"),
                lat=float(_require(rb, "lat", (int, float), f"buses[{i}]")),
                lon=float(_require(rb, "lon", (int, float), f"buses[{i}]")),
            )
        )
    lines = []
    for i, rl in enumerate(raw_lines):
        if not isinstance(rl, dict):
            raise SchemaError(f"lines[{i}]: not an object")
        lines.append(
            LineRecord(
                idx=_require(rl, "idx", int, f"lines[{i}]"),
                from_bus=_require(rl, "from", int, f"lines[{i}]"),
                to_bus=_require(rl, "to", int, f"lines[{i}]"),
            )
        )
    return _validate(name, buses, lines)


def _csv_rows(document: bytes | str, required: list[str], where: str):
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    reader = csv.DictReader(io.StringIO(document))
    if reader.fieldnames is None:
        raise SchemaError(f"{where}: empty CSV")
    missing = [c for c in required if c not in reader.fieldnames]
    if missing:
        raise SchemaError(f"{where}: missing columns {missing}")
    return list(reader)


def parse_case_csv(buses_csv, lines_csv, name: str = "case") -> CaseTopology:
    buses = []
    for i, row in enumerate(_csv_rows(buses_csv, ["idx", "name", "lat", "lon"], "buses.csv")):
        try:
            buses.append(
                BusRecord(int(row["idx"]), row["name"], float(row["lat"]), float(row["lon"]))
            )
        except (TypeError, ValueError) as e:
            raise SchemaError(f"buses.csv row {i + 2}: {e}") from e
    lines = []
    for i, row in enumerate(_csv_rows(lines_csv, ["idx", "from", "to"], "lines.csv")):
        try:
            lines.append(LineRecord(int(row["idx"]), int(row["from"]), int(row["to"])))
        except (TypeError, ValueError) as e:
            raise SchemaError(f"lines.csv row {i + 2}: {e}") from e
    return _validate(name, buses, lines)


def parse_case(document, fmt: str, lines_csv=None, name: str = "case") -> CaseTopology:
    if fmt == "json":
        return parse_case_json(document)
    if fmt == "csv":
        if lines_csv is None:
            raise SchemaError("csv intake needs both buses.csv and lines.csv")
        return parse_case_csv(document, lines_csv, name)
    raise SchemaError(f"unknown case format {fmt!r}")


def case_to_json(c: CaseTopology) -> str:
    """Canonical emitter; json -> json is byte-stable after one pass."""
    obj = {
        "name": c.name,
        "buses": [
            {"idx": b.idx, "name": b.name, "lat": b.lat, "lon": b.lon} for b in c.buses
        ],
        "lines": [
            {"idx": ln.idx, "from": ln.from_bus, "to": ln.to_bus} for ln in c.lines
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def convert_case(buses_csv, lines_csv, name: str = "case") -> str:
    """CSV pair -> canonical JSON; parse(convert(d)) == parse(d)."""
    return case_to_json(parse_case_csv(buses_csv, lines_csv, name))


# -- streaming convention ----------------------------------------------------

def case_to_topology_vars(c: CaseTopology) -> list[tuple[str, Value]]:
    bus = np.array([[b.idx, b.lat, b.lon] for b in c.buses], dtype="<f8")
    line = np.array(
        [[ln.from_bus, ln.to_bus] for ln in c.lines], dtype="<i8"
    ).reshape(len(c.lines), 2)
    return [
        ("topo_bus", VArray(TAG_DOUBLE, (len(c.buses), 3), bus)),
        ("topo_line", VArray(TAG_INT, (len(c.lines), 2), line)),
        ("topo_name", VStr(c.name)),
    ]


def topology_vars_to_case(vars_map: dict[str, Value]) -> CaseTopology:
    """Consumer-side inverse; bus names are synthesized from ids."""
    bus = vars_map["topo_bus"]
    line = vars_map["topo_line"]
    name = vars_map["topo_name"]
    if not isinstance(bus, VArray) or bus.dims[1:] != (3,):
        raise SchemaError("topo_bus must be an N x 3 double array")
    if not isinstance(line, VArray) or line.dims[1:] != (2,):
        raise SchemaError("topo_line must be an M x 2 int array")
    if not isinstance(name, VStr):
        raise SchemaError("topo_name must be a string")
    b = bus.data.reshape(bus.dims)
    l = line.data.reshape(line.dims)
    buses = [
        BusRecord(int(row[0]), f"bus {int(row[0])}", float(row[1]), float(row[2]))
        for row in b
    ]
    lines = [LineRecord(i + 1, int(r[0]), int(r[1])) for i, r in enumerate(l)]
    return _validate(name.v, buses, lines)
