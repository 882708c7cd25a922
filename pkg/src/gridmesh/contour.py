"""Heat-map math: Mercator projection, incremental Delaunay triangulation,
barycentric interpolation, colormap, and offline PPM rasterization.

This is the reference renderer for the map UI's contour layer: a per-bus
scalar field is interpolated linearly over the Delaunay triangulation of
the projected bus positions and mapped through a blue-green-red palette
centered on a nominal value with a configurable half-width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_MERCATOR_LAT = 85.06
COCIRCULAR_EPS = 1e-9
DUPLICATE_EPS = 1e-12
BARY_EPS = 1e-12


class TriangulationError(Exception):
    pass


class TooFewPoints(TriangulationError):
    pass


class DuplicatePoint(TriangulationError):
    pass


class AllCollinear(TriangulationError):
    pass


def project_mercator(lat: float, lon: float) -> tuple[float, float]:
    """Web-Mercator: x in radians, y dimensionless; lat clamped to +-85.06."""
    lat = max(-MAX_MERCATOR_LAT, min(MAX_MERCATOR_LAT, lat))
    phi = math.radians(lat)
    # asinh(tan(phi)) == ln(tan(pi/4 + phi/2)), exact at phi = 0
    return math.radians(lon), math.asinh(math.tan(phi))


@dataclass(frozen=True)
class Triangulation:
    points: tuple[tuple[float, float], ...]
    triangles: tuple[tuple[int, int, int], ...]  # CCW vertex index triples


@dataclass(frozen=True)
class ContourFrame:
    t: float
    values: tuple[float, ...]


@dataclass(frozen=True)
class HeatRange:
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be > 0")


def _orient2d(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _circumcircle(a, b, c):
    """Returns (cx, cy, r2) or None for a degenerate triangle."""
    d = 2.0 * _orient2d(a, b, c)
    if d == 0.0:
        return None
    a2 = a[0] * a[0] + a[1] * a[1]
    b2 = b[0] * b[0] + b[1] * b[1]
    c2 = c[0] * c[0] + c[1] * c[1]
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
    return ux, uy, r2


def incircle_normalized(a, b, c, d) -> float:
    """Normalized incircle determinant for CCW triangle abc and query d.

    Positive: d strictly inside the circumcircle; ~0: cocircular.
    """
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    det = (
        adx * (bdy * cd2 - cdy * bd2)
        - ady * (bdx * cd2 - cdx * bd2)
        + ad2 * (bdx * cdy - cdx * bdy)
    )
    scale = max(ad2, bd2, cd2)
    if scale == 0.0:
        return 0.0
    return det / (scale * scale)


def delaunay(points) -> Triangulation:
    """Bowyer-Watson over a circumscribing super-triangle.

    Cocircular ties are resolved by a post-pass that flips shared edges
    toward the diagonal containing the smallest vertex index.
    """
    pts = [(float(x), float(y)) for x, y in points]
    n = len(pts)
    if n < 3:
        raise TooFewPoints(f"need >= 3 points, got {n}")
    for i in range(n):
        for j in range(i + 1, n):
            if (
                abs(pts[i][0] - pts[j][0]) <= DUPLICATE_EPS
                and abs(pts[i][1] - pts[j][1]) <= DUPLICATE_EPS
            ):
                raise DuplicatePoint(f"points {i} and {j} coincide")
    # super-triangle: circumscribe the bounding box, then scale 20x
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    cx = (min(xs) + max(xs)) / 2.0
    cy = (min(ys) + max(ys)) / 2.0
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
    m = 20.0 * span
    sup = [(cx - 3 * m, cy - m), (cx + 3 * m, cy - m), (cx, cy + 3 * m)]
    verts = pts + sup
    s0, s1, s2 = n, n + 1, n + 2

    tris: list[tuple[int, int, int]] = [(s0, s1, s2)]
    circ = {(s0, s1, s2): _circumcircle(verts[s0], verts[s1], verts[s2])}

    for ip in range(n):
        p = verts[ip]
        bad = []
        for t in tris:
            cc = circ[t]
            if cc is None:
                continue
            if (p[0] - cc[0]) ** 2 + (p[1] - cc[1]) ** 2 < cc[2] * (1.0 - 1e-12):
                bad.append(t)
        edge_count: dict[tuple[int, int], int] = {}
        edges = []
        for t in bad:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
                edges.append(e)
        bad_set = set(bad)
        tris = [t for t in tris if t not in bad_set]
        for t in bad:
            circ.pop(t, None)
        for e in edges:
            if edge_count[(min(e), max(e))] == 1:
                nt = (e[0], e[1], ip)
                if _orient2d(verts[nt[0]], verts[nt[1]], verts[nt[2]]) < 0:
                    nt = (nt[1], nt[0], ip)
                tris.append(nt)
                circ[nt] = _circumcircle(verts[nt[0]], verts[nt[1]], verts[nt[2]])

    out = []
    for t in tris:
        if any(v >= n for v in t):
            continue
        if _orient2d(verts[t[0]], verts[t[1]], verts[t[2]]) == 0.0:
            continue
        out.append(t)
    if not out:
        raise AllCollinear("no non-degenerate triangle exists")

    out = _canonical_flips(pts, out)
    out = [_rotate_min_first(t) for t in out]
    out.sort()
    return Triangulation(tuple(pts), tuple(out))


def _rotate_min_first(t):
    i = t.index(min(t))
    return (t[i], t[(i + 1) % 3], t[(i + 2) % 3])


def _canonical_flips(pts, tris):
    """Flip cocircular quads so the kept diagonal holds the lowest index."""
    tris = [tuple(t) for t in tris]
    for _ in range(len(tris) * 3 + 8):
        edge_map: dict[tuple[int, int], list[int]] = {}
        for ti, t in enumerate(tris):
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                edge_map.setdefault((min(e), max(e)), []).append(ti)
        flipped = False
        for edge in sorted(edge_map):
            owners = edge_map[edge]
            if len(owners) != 2:
                continue
            t1, t2 = tris[owners[0]], tris[owners[1]]
            a, b = edge
            c = next(v for v in t1 if v not in edge)
            d = next(v for v in t2 if v not in edge)
            det = incircle_normalized(pts[t1[0]], pts[t1[1]], pts[t1[2]], pts[d])
            if abs(det) > COCIRCULAR_EPS:
                continue
            quad_min = min(a, b, c, d)
            if quad_min in edge:
                continue  # already the preferred diagonal
            n1 = (c, d, a)
            n2 = (d, c, b)
            if _orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) <= 0:
                n1 = (d, c, a)
            if _orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) <= 0:
                n2 = (c, d, b)
            if (
                _orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) <= 0
                or _orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) <= 0
            ):
                continue  # non-convex quad; flip invalid
            tris[owners[0]] = n1
            tris[owners[1]] = n2
            flipped = True
            break
        if not flipped:
            return tris
    return tris


def barycentric(tri_pts, q) -> tuple[float, float, float] | None:
    """Weights of q in the triangle, or None if degenerate."""
    (ax, ay), (bx, by), (cx, cy) = tri_pts
    den = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
    if den == 0.0:
        return None
    w0 = ((by - cy) * (q[0] - cx) + (cx - bx) * (q[1] - cy)) / den
    w1 = ((cy - ay) * (q[0] - cx) + (ax - cx) * (q[1] - cy)) / den
    return w0, w1, 1.0 - w0 - w1


OUTSIDE = None


def interpolate(tri: Triangulation, vertex_values, q) -> float | None:
    """Linear (barycentric) value at q, or None outside the hull.

    Boundary points are inclusive; containment is first-hit in triangle
    list order, so results are deterministic.
    """
    if len(vertex_values) != len(tri.points):
        raise ValueError("one value per triangulation point required")
    for t in tri.triangles:
        w = barycentric((tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]), q)
        if w is None:
            continue
        if all(wi >= -BARY_EPS for wi in w):
            return (
                w[0] * vertex_values[t[0]]
                + w[1] * vertex_values[t[1]]
                + w[2] * vertex_values[t[2]]
            )
    return OUTSIDE


def colormap(v: float, rng: HeatRange) -> tuple[int, int, int]:
    """Three-stop palette blue -> green -> red across center +- half_width."""
    t = (v - (rng.center - rng.half_width)) / (2.0 * rng.half_width)
    t = max(0.0, min(1.0, t))
    if t <= 0.5:
        s = t * 2.0
        rgb = (0.0, 255.0 * s, 255.0 * (1.0 - s))
    else:
        s = (t - 0.5) * 2.0
        rgb = (255.0 * s, 255.0 * (1.0 - s), 0.0)
    return tuple(int(math.floor(c + 0.5)) for c in rgb)


@dataclass(frozen=True)
class Viewport:
    x0: float
    y0: float
    x1: float
    y1: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("viewport bbox must have positive area")
        if self.width < 1 or self.height < 1:
            raise ValueError("viewport size must be >= 1 x 1")


def rasterize_frame(
    tri: Triangulation, frame: ContourFrame, rng: HeatRange, viewport: Viewport
) -> np.ndarray:
    """Render one frame to an RGBA uint8 array (alpha 0 outside the hull).

    Pixels are assigned by the first triangle in list order that
    contains their center, matching interpolate()'s rule.
    """
    if len(frame.values) != len(tri.points):
        raise ValueError("one value per triangulation point required")
    w, h = viewport.width, viewport.height
    xs = viewport.x0 + (np.arange(w) + 0.5) * (viewport.x1 - viewport.x0) / w
    ys = viewport.y1 - (np.arange(h) + 0.5) * (viewport.y1 - viewport.y0) / h
    px, py = np.meshgrid(xs, ys)  # (h, w), row 0 = top
    val = np.full((h, w), np.nan)
    unassigned = np.ones((h, w), dtype=bool)
    vals = np.asarray(frame.values, dtype=float)
    for t in tri.triangles:
        (ax, ay), (bx, by), (cx, cy) = (tri.points[i] for i in t)
        den = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy)
        if den == 0.0:
            continue
        w0 = ((by - cy) * (px - cx) + (cx - bx) * (py - cy)) / den
        w1 = ((cy - ay) * (px - cx) + (ax - cx) * (py - cy)) / den
        w2 = 1.0 - w0 - w1
        hit = (
            (w0 >= -BARY_EPS) & (w1 >= -BARY_EPS) & (w2 >= -BARY_EPS) & unassigned
        )
        if hit.any():
            val[hit] = (
                w0[hit] * vals[t[0]] + w1[hit] * vals[t[1]] + w2[hit] * vals[t[2]]
            )
            unassigned &= ~hit

    img = np.zeros((h, w, 4), dtype=np.uint8)
    inside = ~unassigned
    if inside.any():
        tt = (val[inside] - (rng.center - rng.half_width)) / (2.0 * rng.half_width)
        tt = np.clip(tt, 0.0, 1.0)
        lo = tt <= 0.5
        s = np.where(lo, tt * 2.0, (tt - 0.5) * 2.0)
        r = np.where(lo, 0.0, 255.0 * s)
        g = np.where(lo, 255.0 * s, 255.0 * (1.0 - s))
        b = np.where(lo, 255.0 * (1.0 - s), 0.0)
        rgba = np.stack(
            [
                np.floor(r + 0.5),
                np.floor(g + 0.5),
                np.floor(b + 0.5),
                np.full(r.shape, 255.0),
            ],
            axis=-1,
        ).astype(np.uint8)
        img[inside] = rgba
    return img


def write_ppm(img: np.ndarray) -> bytes:
    """Binary PPM (P6); RGBA input is composited over white."""
    if img.ndim != 3 or img.shape[2] not in (3, 4):
        raise ValueError("expected (h, w, 3|4) uint8 image")
    h, w = img.shape[:2]
    if img.shape[2] == 4:
        a = img[:, :, 3:4].astype(np.float64) / 255.0
        rgb = img[:, :, :3].astype(np.float64) * a + 255.0 * (1.0 - a)
        rgb = np.floor(rgb + 0.5).astype(np.uint8)
    else:
        rgb = img
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Minimal P6 reader (for tests and parity probes)."""
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 PPM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    raw = data[pos : pos + 3 * w * h]
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3)
