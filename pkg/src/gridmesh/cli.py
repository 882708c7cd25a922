"""gridmesh command-line suite.

serve   -- run the shared-workspace broker on tcp/ipc/websocket endpoints
drive   -- publish a case topology then a frame stream to a group
record  -- capture a group's stream to a recording file
replay  -- republish a recording at a speed multiplier
render  -- rasterize a recording's frames to PPM heat maps
bench   -- loopback throughput measurement (doubles per second)
convert -- CSV case pair -> canonical JSON
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
import threading
import time
from pathlib import Path

import numpy as np

from . import cases, client, recording, synth
from .client import Binding
from .contour import ContourFrame, HeatRange, Viewport, delaunay, project_mercator, rasterize_frame, write_ppm
from .server import Server
from .values import (
    VArray,
    VBool,
    VDouble,
    VStr,
    array_of_doubles,
    decode_named_values,
    encode_named_values,
)

log = logging.getLogger("gridmesh")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_IDLE = 2


def _hostport(s: str) -> tuple[str, int]:
    host, _, port = s.rpartition(":")
    return host, int(port)


# -- serve --------------------------------------------------------------------

def cmd_serve(args) -> int:
    if not (args.tcp or args.ipc or args.ws):
        print("serve: no transport specified (need --tcp/--ipc/--ws)", file=sys.stderr)
        return EXIT_ERROR

    async def run():
        srv = Server()
        srv.broker.max_sessions = args.max_sessions
        try:
            if args.tcp:
                host, port = _hostport(args.tcp)
                await srv.bind_tcp(host, port)
            if args.ipc:
                await srv.bind_ipc(args.ipc)
            if args.ws:
                host, port = _hostport(args.ws)
                await srv.bind_ws(host, port)
        except OSError as e:
            print(f"serve: bind failed: {e}", file=sys.stderr)
            return EXIT_ERROR
        print("gridmesh server ready", flush=True)
        try:
            await srv.serve_forever()
        except asyncio.CancelledError:
            pass
        finally:
            await srv.close()
        return EXIT_OK

    try:
        return asyncio.run(run())
    except KeyboardInterrupt:
        return EXIT_OK


# -- drive --------------------------------------------------------------------

def _load_case(path: str) -> cases.CaseTopology:
    return cases.parse_case_json(Path(path).read_bytes())


def _connect(args) -> client.ClientHandle:
    return client.connect(Binding(args.transport, args.connect))


def _wait_for_ack(h: client.ClientHandle, timeout_s: float = 30.0) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if h.wait(timeout_ms=1000):
            for name, _ in h.sync_r():
                if name == "ack":
                    return
    raise client.ClientError("timed out waiting for consumer ack")


def cmd_drive(args) -> int:
    case = _load_case(args.case)
    n = len(case.buses)

    if args.series:
        doc = json.loads(Path(args.series).read_text())
        var = doc.get("var", args.var)
        series = [(float(f["t"]), np.asarray(f["values"], dtype=float)) for f in doc["frames"]]
        for t, vec in series:
            if len(vec) != n:
                print(
                    f"drive: series vector length {len(vec)} != bus count {n}",
                    file=sys.stderr,
                )
                return EXIT_ERROR
    else:
        var = args.var
        params = synth.WaveParams(
            f0=args.f0,
            amplitude=args.amplitude,
            origin_bus=args.origin_bus if args.origin_bus is not None else case.buses[0].idx,
            speed=args.speed,
            decay=args.decay,
            t_event=args.t_event,
        )
        ts = [args.dt * (i + 1) for i in range(args.frames)]
        series = [(t, synth.synth_wave(case, params, t)) for t in ts]

    h = _connect(args)
    try:
        h.join([args.group])
        h.send_pairs([args.group], cases.case_to_topology_vars(case))
        if args.lockstep:
            _wait_for_ack(h)
        prev_t = None
        for t, vec in series:
            if args.rate == "real-time" and prev_t is not None:
                time.sleep(max(0.0, t - prev_t))
            prev_t = t
            h.send_pairs(
                [args.group],
                [("ts", VDouble(t)), (var, array_of_doubles(vec))],
            )
            if args.lockstep:
                _wait_for_ack(h)
        h.broadcast_r("done", VBool(True))
        print(f"drove {len(series)} frames of {var!r} to group {args.group}")
        return EXIT_OK
    finally:
        h.close()


# -- record -------------------------------------------------------------------

def cmd_record(args) -> int:
    h = _connect(args)
    idle_ms = int(args.idle_timeout * 1000)
    received = 0
    try:
        h.join([args.group])
        with open(args.out, "wb") as fh:
            writer = recording.RecordingWriter(fh)
            while True:
                if not h.wait(timeout_ms=idle_ms):
                    print(f"record: idle for {args.idle_timeout}s, stopping", file=sys.stderr)
                    return EXIT_IDLE
                pairs = h.sync_r()
                if not pairs:
                    continue
                ts = None
                done = False
                for name, v in pairs:
                    if name == "ts" and isinstance(v, VDouble):
                        ts = v.v
                    if name == "done" and isinstance(v, VBool) and v.v:
                        done = True
                writer.append(ts, encode_named_values(pairs))
                received += 1
                if args.ack:
                    h.send_r([args.group], "ack", VDouble(float(received)))
                if done:
                    print(f"recorded {received} records to {args.out}")
                    return EXIT_OK
    finally:
        h.close()


# -- replay -------------------------------------------------------------------

def cmd_replay(args) -> int:
    data = Path(args.recording).read_bytes()
    records = recording.read_recording(data)
    speed = None if args.speed == "max" else float(args.speed)
    if speed is not None and speed <= 0:
        print("replay: speed must be positive or 'max'", file=sys.stderr)
        return EXIT_ERROR
    h = _connect(args)
    try:
        h.join([args.group])
        prev_ts = None
        for rec in records:
            if speed is not None and prev_ts is not None:
                time.sleep(max(0.0, (rec.ts - prev_ts) / speed))
            prev_ts = rec.ts
            pairs = decode_named_values(rec.payload)
            h.send_pairs([args.group], pairs)
            if args.lockstep:
                _wait_for_ack(h)
        print(f"replayed {len(records)} records to group {args.group}")
        return EXIT_OK
    finally:
        h.close()


# -- render -------------------------------------------------------------------

def bus_viewport(case: cases.CaseTopology, width: int, height: int) -> Viewport:
    pts = [project_mercator(b.lat, b.lon) for b in case.buses]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    dx = max(xs) - min(xs) or 1e-6
    dy = max(ys) - min(ys) or 1e-6
    return Viewport(
        min(xs) - 0.05 * dx,
        min(ys) - 0.05 * dy,
        max(xs) + 0.05 * dx,
        max(ys) + 0.05 * dy,
        width,
        height,
    )


def cmd_render(args) -> int:
    case = _load_case(args.case)
    records = recording.read_recording(Path(args.recording).read_bytes())
    n = len(case.buses)

    frames_out = []
    for rec in records:
        pairs = dict(decode_named_values(rec.payload))
        if args.var not in pairs:
            continue
        arr = pairs[args.var]
        if not isinstance(arr, VArray):
            continue
        vec = arr.data.astype(float)
        if vec.size != n:
            print(
                f"render: frame vector length {vec.size} != bus count {n}",
                file=sys.stderr,
            )
            return EXIT_ERROR
        ts = pairs.get("ts")
        t = ts.v if isinstance(ts, VDouble) else rec.ts
        frames_out.append(ContourFrame(t, tuple(vec)))
    if not frames_out:
        print(f"render: variable {args.var!r} absent from recording", file=sys.stderr)
        return EXIT_ERROR

    tri = delaunay([project_mercator(b.lat, b.lon) for b in case.buses])
    rng = HeatRange(args.center, args.half_width)
    w, h = (int(x) for x in args.size.lower().split("x"))
    viewport = bus_viewport(case, w, h)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames_out):
        img = rasterize_frame(tri, frame, rng, viewport)
        (outdir / f"frame_{i:06d}.ppm").write_bytes(write_ppm(img))
    print(f"rendered {len(frames_out)} frames to {outdir}")
    return EXIT_OK


# -- bench --------------------------------------------------------------------

def cmd_bench(args) -> int:
    group = "bench"
    k, m = args.size, args.reps
    total = k * m
    result = {"received": 0, "done": False}
    ready = threading.Event()
    finished = threading.Event()

    def consumer():
        hb = client.connect(Binding(args.transport, args.connect))
        try:
            hb.join([group])
            ready.set()
            while not result["done"]:
                if not hb.wait(timeout_ms=10000):
                    break
                for name, v in hb.sync_r():
                    if name == "bench_done":
                        result["done"] = True
                    elif isinstance(v, VArray):
                        result["received"] += v.data.size
                        if args.direction == "roundtrip":
                            hb.send_r([group], "ack", VDouble(1.0))
        finally:
            finished.set()
            hb.close()

    th = threading.Thread(target=consumer, daemon=True)
    th.start()
    if not ready.wait(10.0):
        print("bench: consumer failed to join", file=sys.stderr)
        return EXIT_ERROR

    ha = client.connect(Binding(args.transport, args.connect))
    payload = np.arange(k, dtype="<f8")
    t0 = time.perf_counter()
    try:
        for i in range(m):
            ha.send_r([group], f"x{i:08d}", array_of_doubles(payload))
            if args.direction == "roundtrip":
                while not ha.wait(timeout_ms=10000):
                    pass
                ha.sync_r()
        ha.send_r([group], "bench_done", VBool(True))
        finished.wait(120.0)
    finally:
        ha.close()
    elapsed = time.perf_counter() - t0
    th.join(5.0)

    received = result["received"]
    rate = received / elapsed if elapsed > 0 else 0.0
    report = {
        "doubles_sent": total,
        "doubles_received": received,
        "elapsed_s": round(elapsed, 6),
        "doubles_per_s": round(rate, 1),
        "frames_per_s": round(m / elapsed, 2) if elapsed > 0 else 0.0,
        "bytes_per_s": round(rate * 8, 1),
        "direction": args.direction,
    }
    print(json.dumps(report))
    return EXIT_OK


# -- convert ------------------------------------------------------------------

def cmd_convert(args) -> int:
    doc = cases.convert_case(
        Path(args.buses).read_bytes(), Path(args.lines).read_bytes(), args.name
    )
    if args.out:
        Path(args.out).write_text(doc)
    else:
        sys.stdout.write(doc)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def _add_client_args(p):
    p.add_argument("--connect", default="127.0.0.1:9900", help="server address")
    p.add_argument(
        "--transport", default="tcp", choices=["tcp", "ipc", "websocket"]
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridmesh", description=__doc__)
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the broker")
    p.add_argument("--tcp", help="HOST:PORT")
    p.add_argument("--ipc", help="unix socket path")
    p.add_argument("--ws", help="HOST:PORT for websocket")
    p.add_argument("--max-sessions", type=int, default=4096)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("drive", help="publish topology + frames")
    _add_client_args(p)
    p.add_argument("--case", required=True)
    p.add_argument("--group", default="geovis")
    p.add_argument("--series", help="JSON series file (else synthetic wave)")
    p.add_argument("--var", default="freq")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--rate", default="max", choices=["real-time", "max"])
    p.add_argument("--lockstep", action="store_true")
    p.add_argument("--f0", type=float, default=60.0)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--origin-bus", type=int, default=None)
    p.add_argument("--speed", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.8)
    p.add_argument("--t-event", type=float, default=0.5)
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("record", help="capture a group's stream")
    _add_client_args(p)
    p.add_argument("--group", default="geovis")
    p.add_argument("--out", required=True)
    p.add_argument("--idle-timeout", type=float, default=5.0)
    p.add_argument("--ack", action="store_true", help="acknowledge each batch (lockstep)")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("replay", help="republish a recording")
    _add_client_args(p)
    p.add_argument("--recording", required=True)
    p.add_argument("--group", default="geovis")
    p.add_argument("--speed", default="1", help="multiplier or 'max'")
    p.add_argument("--lockstep", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("render", help="rasterize recording frames to PPM")
    p.add_argument("--case", required=True)
    p.add_argument("--recording", required=True)
    p.add_argument("--var", default="freq")
    p.add_argument("--center", type=float, default=60.0)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--size", default="320x240")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bench", help="loopback throughput measurement")
    _add_client_args(p)
    p.add_argument("--size", type=int, default=1_000_000, help="doubles per frame")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--direction", default="send", choices=["send", "roundtrip"])
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert", help="CSV case pair -> canonical JSON")
    p.add_argument("--buses", required=True)
    p.add_argument("--lines", required=True)
    p.add_argument("--name", default="case")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (client.ClientError, cases.CaseError, recording.RecordingError) as e:
        print(f"gridmesh {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
