/**
 * Canonical JSON case documents and their streamed topology form.
 *
 * A case is { name, buses: [{idx, name, lat, lon}], lines: [{idx, from, to}] }.
 * Over the wire the same topology arrives as three variables:
 *   topo_bus  — double array [N, 3] of (idx, lat, lon)
 *   topo_line — int array [M, 2] of (from idx, to idx)
 *   topo_name — case name string
 */

import { TAG_DOUBLE, TAG_INT, Value, arrayToNumbers } from "./values.js";

export interface Bus {
  idx: number;
  name: string;
  lat: number;
  lon: number;
}

export interface Line {
  idx: number;
  from: number;
  to: number;
}

export interface CaseTopology {
  name: string;
  buses: Bus[];
  lines: Line[];
}

export class CaseFormatError extends Error {}

function asNumber(x: unknown, what: string): number {
  if (typeof x !== "number" || !Number.isFinite(x)) throw new CaseFormatError(`${what} must be a finite number`);
  return x;
}

export function parseCaseJson(text: string): CaseTopology {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new CaseFormatError(`not valid JSON: ${e}`);
  }
  if (typeof doc !== "object" || doc === null) throw new CaseFormatError("case must be an object");
  const d = doc as Record<string, unknown>;
  if (typeof d.name !== "string" || !Array.isArray(d.buses) || !Array.isArray(d.lines)) {
    throw new CaseFormatError("case needs name, buses, lines");
  }
  const buses: Bus[] = d.buses.map((b: Record<string, unknown>, i: number) => {
    const idx = asNumber(b.idx, `bus[${i}].idx`);
    const lat = asNumber(b.lat, `bus[${i}].lat`);
    const lon = asNumber(b.lon, `bus[${i}].lon`);
    if (typeof b.name !== "string") throw new CaseFormatError(`bus[${i}].name must be a string`);
    if (lat < -90 || lat > 90) throw new CaseFormatError(`bus[${i}].lat out of range`);
    if (lon < -180 || lon > 180) throw new CaseFormatError(`bus[${i}].lon out of range`);
    return { idx, name: b.name, lat, lon };
  });
  const known = new Set(buses.map((b) => b.idx));
  if (known.size !== buses.length) throw new CaseFormatError("duplicate bus idx");
  const lines: Line[] = d.lines.map((l: Record<string, unknown>, i: number) => {
    const idx = asNumber(l.idx, `line[${i}].idx`);
    const from = asNumber(l.from, `line[${i}].from`);
    const to = asNumber(l.to, `line[${i}].to`);
    if (!known.has(from) || !known.has(to)) {
      throw new CaseFormatError(`line[${i}] references an unknown bus`);
    }
    return { idx, from, to };
  });
  return { name: d.name, buses, lines };
}

/** Rebuild a topology from the streamed topo_* variables, if all present. */
export function topologyFromVars(vars: Map<string, Value>): CaseTopology | null {
  const busVar = vars.get("topo_bus");
  const lineVar = vars.get("topo_line");
  const nameVar = vars.get("topo_name");
  if (!busVar || !lineVar || !nameVar) return null;
  if (busVar.kind !== "array" || busVar.elem !== TAG_DOUBLE || busVar.dims.length !== 2 || busVar.dims[1] !== 3) {
    throw new CaseFormatError("topo_bus must be a [N, 3] double array");
  }
  if (lineVar.kind !== "array" || lineVar.elem !== TAG_INT || lineVar.dims.length !== 2 || lineVar.dims[1] !== 2) {
    throw new CaseFormatError("topo_line must be a [M, 2] int array");
  }
  if (nameVar.kind !== "str") throw new CaseFormatError("topo_name must be a string");
  const busFlat = arrayToNumbers(busVar);
  const lineFlat = arrayToNumbers(lineVar);
  const buses: Bus[] = [];
  for (let i = 0; i < busVar.dims[0]; i++) {
    const idx = busFlat[i * 3];
    buses.push({ idx, name: `Bus ${idx}`, lat: busFlat[i * 3 + 1], lon: busFlat[i * 3 + 2] });
  }
  const lines: Line[] = [];
  for (let i = 0; i < lineVar.dims[0]; i++) {
    lines.push({ idx: i + 1, from: lineFlat[i * 2], to: lineFlat[i * 2 + 1] });
  }
  return { name: nameVar.v, buses, lines };
}
