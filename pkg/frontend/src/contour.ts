/**
 * Contour-layer math: Web-Mercator projection, Bowyer-Watson Delaunay
 * triangulation with deterministic cocircular tie-breaking, barycentric
 * interpolation, and the blue-green-red heat palette.
 *
 * This mirrors the renderer used by the offline tooling: same projection,
 * same triangulation rules, same palette, so streamed frames paint the
 * same colors in the browser as in exported images.
 */

export const MAX_MERCATOR_LAT = 85.06;
export const COCIRCULAR_EPS = 1e-9;
export const DUPLICATE_EPS = 1e-12;
export const BARY_EPS = 1e-12;

export type Point = [number, number];
export type Triangle = [number, number, number];

export class TriangulationError extends Error {}
export class TooFewPoints extends TriangulationError {}
export class DuplicatePoint extends TriangulationError {}
export class AllCollinear extends TriangulationError {}

export function projectMercator(lat: number, lon: number): Point {
  const clamped = Math.max(-MAX_MERCATOR_LAT, Math.min(MAX_MERCATOR_LAT, lat));
  const phi = (clamped * Math.PI) / 180;
  return [(lon * Math.PI) / 180, Math.asinh(Math.tan(phi))];
}

export interface Triangulation {
  points: Point[];
  triangles: Triangle[]; // CCW vertex index triples, sorted
}

function orient2d(a: Point, b: Point, c: Point): number {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

function circumcircle(a: Point, b: Point, c: Point): [number, number, number] | null {
  const d = 2 * orient2d(a, b, c);
  if (d === 0) return null;
  const a2 = a[0] * a[0] + a[1] * a[1];
  const b2 = b[0] * b[0] + b[1] * b[1];
  const c2 = c[0] * c[0] + c[1] * c[1];
  const ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
  const uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
  const r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2;
  return [ux, uy, r2];
}

/** Normalized incircle determinant; positive means d is strictly inside. */
export function incircleNormalized(a: Point, b: Point, c: Point, d: Point): number {
  const adx = a[0] - d[0];
  const ady = a[1] - d[1];
  const bdx = b[0] - d[0];
  const bdy = b[1] - d[1];
  const cdx = c[0] - d[0];
  const cdy = c[1] - d[1];
  const ad2 = adx * adx + ady * ady;
  const bd2 = bdx * bdx + bdy * bdy;
  const cd2 = cdx * cdx + cdy * cdy;
  const det =
    adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) + ad2 * (bdx * cdy - cdx * bdy);
  const scale = Math.max(ad2, bd2, cd2);
  return scale === 0 ? 0 : det / (scale * scale);
}

function rotateMinFirst(t: Triangle): Triangle {
  const m = Math.min(t[0], t[1], t[2]);
  const i = t.indexOf(m);
  return [t[i], t[(i + 1) % 3], t[(i + 2) % 3]];
}

function edgeKey(i: number, j: number): string {
  return i < j ? `${i},${j}` : `${j},${i}`;
}

function canonicalFlips(pts: Point[], tris: Triangle[]): Triangle[] {
  // flip cocircular quads so the kept diagonal holds the lowest index
  const work = tris.map((t) => [...t] as Triangle);
  for (let round = 0; round < work.length * 3 + 8; round++) {
    const edgeMap = new Map<string, number[]>();
    work.forEach((t, ti) => {
      for (const [i, j] of [
        [t[0], t[1]],
        [t[1], t[2]],
        [t[2], t[0]],
      ]) {
        const key = edgeKey(i, j);
        const owners = edgeMap.get(key);
        if (owners) owners.push(ti);
        else edgeMap.set(key, [ti]);
      }
    });
    let flipped = false;
    const keys = [...edgeMap.keys()].sort((x, y) => {
      const [x0, x1] = x.split(",").map(Number);
      const [y0, y1] = y.split(",").map(Number);
      return x0 - y0 || x1 - y1;
    });
    for (const key of keys) {
      const owners = edgeMap.get(key)!;
      if (owners.length !== 2) continue;
      const [a, b] = key.split(",").map(Number);
      const t1 = work[owners[0]];
      const t2 = work[owners[1]];
      const c = t1.find((v) => v !== a && v !== b)!;
      const d = t2.find((v) => v !== a && v !== b)!;
      const det = incircleNormalized(pts[t1[0]], pts[t1[1]], pts[t1[2]], pts[d]);
      if (Math.abs(det) > COCIRCULAR_EPS) continue;
      const quadMin = Math.min(a, b, c, d);
      if (quadMin === a || quadMin === b) continue; // already the preferred diagonal
      let n1: Triangle = [c, d, a];
      let n2: Triangle = [d, c, b];
      if (orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) <= 0) n1 = [d, c, a];
      if (orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) <= 0) n2 = [c, d, b];
      if (
        orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) <= 0 ||
        orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) <= 0
      ) {
        continue; // non-convex quad; flip invalid
      }
      work[owners[0]] = n1;
      work[owners[1]] = n2;
      flipped = true;
      break;
    }
    if (!flipped) return work;
  }
  return work;
}

export function delaunay(points: Point[]): Triangulation {
  const pts: Point[] = points.map((p) => [p[0], p[1]]);
  const n = pts.length;
  if (n < 3) throw new TooFewPoints(`need >= 3 points, got ${n}`);
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      if (
        Math.abs(pts[i][0] - pts[j][0]) <= DUPLICATE_EPS &&
        Math.abs(pts[i][1] - pts[j][1]) <= DUPLICATE_EPS
      ) {
        throw new DuplicatePoint(`points ${i} and ${j} coincide`);
      }
    }
  }
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const cx = (Math.min(...xs) + Math.max(...xs)) / 2;
  const cy = (Math.min(...ys) + Math.max(...ys)) / 2;
  const span = Math.max(Math.max(...xs) - Math.min(...xs), Math.max(...ys) - Math.min(...ys), 1);
  const m = 20 * span;
  const verts: Point[] = [...pts, [cx - 3 * m, cy - m], [cx + 3 * m, cy - m], [cx, cy + 3 * m]];

  let tris: Triangle[] = [[n, n + 1, n + 2]];
  const circ = new Map<string, [number, number, number] | null>();
  const tkey = (t: Triangle) => `${t[0]},${t[1]},${t[2]}`;
  circ.set(tkey(tris[0]), circumcircle(verts[n], verts[n + 1], verts[n + 2]));

  for (let ip = 0; ip < n; ip++) {
    const p = verts[ip];
    const bad: Triangle[] = [];
    for (const t of tris) {
      const cc = circ.get(tkey(t));
      if (!cc) continue;
      if ((p[0] - cc[0]) ** 2 + (p[1] - cc[1]) ** 2 < cc[2] * (1 - 1e-12)) bad.push(t);
    }
    const edgeCount = new Map<string, number>();
    const edges: [number, number][] = [];
    for (const t of bad) {
      for (const e of [
        [t[0], t[1]],
        [t[1], t[2]],
        [t[2], t[0]],
      ] as [number, number][]) {
        const key = edgeKey(e[0], e[1]);
        edgeCount.set(key, (edgeCount.get(key) ?? 0) + 1);
        edges.push(e);
      }
    }
    const badKeys = new Set(bad.map(tkey));
    tris = tris.filter((t) => !badKeys.has(tkey(t)));
    for (const k of badKeys) circ.delete(k);
    for (const e of edges) {
      if (edgeCount.get(edgeKey(e[0], e[1])) !== 1) continue;
      let nt: Triangle = [e[0], e[1], ip];
      if (orient2d(verts[nt[0]], verts[nt[1]], verts[nt[2]]) < 0) nt = [e[1], e[0], ip];
      tris.push(nt);
      circ.set(tkey(nt), circumcircle(verts[nt[0]], verts[nt[1]], verts[nt[2]]));
    }
  }

  let out = tris.filter(
    (t) =>
      t[0] < n &&
      t[1] < n &&
      t[2] < n &&
      orient2d(verts[t[0]], verts[t[1]], verts[t[2]]) !== 0,
  );
  if (out.length === 0) throw new AllCollinear("no non-degenerate triangle exists");

  out = canonicalFlips(pts, out).map(rotateMinFirst);
  out.sort((a, b) => a[0] - b[0] || a[1] - b[1] || a[2] - b[2]);
  return { points: pts, triangles: out };
}

export function barycentric(triPts: [Point, Point, Point], q: Point): [number, number, number] | null {
  const [[ax, ay], [bx, by], [cx, cy]] = triPts;
  const den = (by - cy) * (ax - cx) + (cx - bx) * (ay - cy);
  if (den === 0) return null;
  const w0 = ((by - cy) * (q[0] - cx) + (cx - bx) * (q[1] - cy)) / den;
  const w1 = ((cy - ay) * (q[0] - cx) + (ax - cx) * (q[1] - cy)) / den;
  return [w0, w1, 1 - w0 - w1];
}

/** Linear value at q, or null outside the hull (first-hit in list order). */
export function interpolate(tri: Triangulation, values: number[], q: Point): number | null {
  if (values.length !== tri.points.length) {
    throw new Error("one value per triangulation point required");
  }
  for (const t of tri.triangles) {
    const w = barycentric([tri.points[t[0]], tri.points[t[1]], tri.points[t[2]]], q);
    if (!w) continue;
    if (w[0] >= -BARY_EPS && w[1] >= -BARY_EPS && w[2] >= -BARY_EPS) {
      return w[0] * values[t[0]] + w[1] * values[t[1]] + w[2] * values[t[2]];
    }
  }
  return null;
}

export interface HeatRange {
  center: number;
  halfWidth: number; // > 0
}

export type Rgb = [number, number, number];

/** Blue -> green -> red across center +- halfWidth, clamped, round half-up. */
export function colormap(v: number, rng: HeatRange): Rgb {
  let t = (v - (rng.center - rng.halfWidth)) / (2 * rng.halfWidth);
  t = Math.max(0, Math.min(1, t));
  let rgb: [number, number, number];
  if (t <= 0.5) {
    const s = t * 2;
    rgb = [0, 255 * s, 255 * (1 - s)];
  } else {
    const s = (t - 0.5) * 2;
    rgb = [255 * s, 255 * (1 - s), 0];
  }
  return rgb.map((c) => Math.floor(c + 0.5)) as Rgb;
}

/** Interpolated color at q, or null outside the hull. */
export function colorAt(tri: Triangulation, values: number[], rng: HeatRange, q: Point): Rgb | null {
  const v = interpolate(tri, values, q);
  return v === null ? null : colormap(v, rng);
}
