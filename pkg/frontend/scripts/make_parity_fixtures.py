#!/usr/bin/env python3
"""Regenerate the cross-implementation parity fixtures in test/fixtures/.

Each fixture freezes output of the Python gridmesh package so the
TypeScript codec and contour math can be checked against it byte for byte
(or channel for channel). Run from the frontend/ directory after any
change to the wire format or contour rules:

    python3 scripts/make_parity_fixtures.py
"""

import json
import math
import random
from pathlib import Path

from gridmesh.cases import case_to_topology_vars, parse_case_json
from gridmesh.contour import HeatRange, colormap, delaunay, interpolate, project_mercator
from gridmesh.frames import Frame, encode_frame
from gridmesh.synth import WaveParams, synth_wave
from gridmesh.values import (
    NULL,
    VArray,
    VBool,
    VComplex,
    VDouble,
    VInt,
    VList,
    VMap,
    VStr,
    TAG_DOUBLE,
    TAG_INT,
    encode_named_values,
    encode_value,
)

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "test" / "fixtures"
FIXTURES = HERE.parents[1] / "src" / "gridmesh" / "fixtures"


def values_fixture():
    import numpy as np

    nan_bits = 0x7FF8DEADBEEF0001
    samples = [
        ("null", NULL),
        ("bool_true", VBool(True)),
        ("int_min", VInt(-(2**63))),
        ("int_max", VInt(2**63 - 1)),
        ("double_pi", VDouble(math.pi)),
        ("double_neg_zero", VDouble(-0.0)),
        ("double_nan_payload", VDouble(np.uint64(nan_bits).view(np.float64))),
        ("complex", VComplex(1.5, -2.5)),
        ("str_unicode", VStr("café 中文")),
        ("str_empty", VStr("")),
        ("array_1d", VArray(TAG_DOUBLE, (4,), np.array([0.0, 0.5, -1.25, 1e300]))),
        ("array_2d_int", VArray(TAG_INT, (2, 3), np.arange(6, dtype="<i8"))),
        ("array_empty", VArray(TAG_DOUBLE, (0,), np.empty(0))),
        ("list_nested", VList([VInt(1), VList([VStr("x"), NULL])])),
        ("map_ordered", VMap([("b", VInt(2)), ("a", VInt(1))])),
    ]
    out = [{"name": n, "hex": encode_value(v).hex()} for n, v in samples]
    (OUT / "parity_values.json").write_text(json.dumps(out, indent=2))

    named = encode_named_values([("x", VInt(7)), ("y", VDouble(2.5)), ("z", VStr("ok"))])
    (OUT / "parity_named_values.json").write_text(json.dumps({"hex": named.hex()}, indent=2))


def frames_fixture():
    import numpy as np

    samples = [
        ("hello", Frame("hello", {"proto": 1})),
        ("join", Frame("join", {"groups": ["geovis", "alt"]})),
        (
            "send",
            Frame(
                "send",
                {"groups": ["geovis"]},
                [("ts", VDouble(0.1)), ("freq", VArray(TAG_DOUBLE, (3,), np.array([59.9, 60.0, 60.1])))],
            ),
        ),
        ("sync", Frame("sync", {"n": -1})),
        ("bye", Frame("bye")),
    ]
    out = [{"name": n, "hex": encode_frame(f).hex()} for n, f in samples]
    (OUT / "parity_frames.json").write_text(json.dumps(out, indent=2))


def contour_fixture():
    case = parse_case_json((FIXTURES / "ieee39.json").read_bytes())
    pts = [project_mercator(b.lat, b.lon) for b in case.buses]
    tri = delaunay(pts)
    params = WaveParams()
    values = [float(x) for x in synth_wave(case, params, 0.8)]
    rng = HeatRange(60.0, 0.5)

    picks = random.Random(7).sample(range(len(tri.triangles)), 20)
    probes = []
    for ti in picks:
        t = tri.triangles[ti]
        cx = sum(tri.points[i][0] for i in t) / 3.0
        cy = sum(tri.points[i][1] for i in t) / 3.0
        v = interpolate(tri, values, (cx, cy))
        probes.append({"q": [cx, cy], "value": v, "rgb": list(colormap(v, rng))})

    doc = {
        "buses": [[b.lat, b.lon] for b in case.buses],
        "points": [list(p) for p in pts],
        "triangles": [list(t) for t in tri.triangles],
        "values": values,
        "heat": {"center": rng.center, "half_width": rng.half_width},
        "probes": probes,
    }
    (OUT / "parity_contour.json").write_text(json.dumps(doc, indent=2))


def topology_fixture():
    case = parse_case_json((FIXTURES / "ieee39.json").read_bytes())
    payload = encode_named_values(case_to_topology_vars(case))
    (OUT / "parity_topology.json").write_text(
        json.dumps({"hex": payload.hex(), "buses": len(case.buses), "lines": len(case.lines)}, indent=2)
    )


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    values_fixture()
    frames_fixture()
    contour_fixture()
    topology_fixture()
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
