import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { History } from "../src/history.js";
import { decodeNamedValues, doublesArray, vbool, vdouble } from "../src/values.js";

const FIXTURES = join(__dirname, "fixtures");

function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) out[i] = parseInt(hex.slice(i * 2, i * 2 + 2), 16);
  return out;
}

function topoBatch() {
  const { hex } = JSON.parse(readFileSync(join(FIXTURES, "parity_topology.json"), "utf-8"));
  return decodeNamedValues(hexToBytes(hex));
}

function frameBatch(t: number, values: number[]) {
  return [
    ["ts", vdouble(t)],
    ["freq", doublesArray(values)],
  ] as [string, ReturnType<typeof vdouble>][];
}

describe("history ingestion", () => {
  it("builds the topology from streamed topo_* variables", () => {
    const h = new History();
    const { topologyChanged } = h.ingest(topoBatch());
    expect(topologyChanged).toBe(true);
    expect(h.topology!.buses).toHaveLength(39);
    expect(h.topology!.lines).toHaveLength(46);
    expect(h.topology!.name).toBe("ieee39");
  });

  it("appends per-bus frames and tracks the span", () => {
    const h = new History();
    h.ingest(topoBatch());
    const n = h.topology!.buses.length;
    for (let i = 0; i < 5; i++) {
      const { frameAdded } = h.ingest(frameBatch(i * 0.5, new Array(n).fill(60 + i)));
      expect(frameAdded).toBe(true);
    }
    expect(h.frames).toHaveLength(5);
    expect(h.span).toBeCloseTo(2.0);
    expect(h.variables()).toEqual(["freq"]);
  });

  it("ignores vectors whose length does not match the bus count", () => {
    const h = new History();
    h.ingest(topoBatch());
    const { frameAdded } = h.ingest(frameBatch(0.1, [1, 2, 3]));
    expect(frameAdded).toBe(false);
  });

  it("freezes on the done marker", () => {
    const h = new History();
    h.ingest(topoBatch());
    const n = h.topology!.buses.length;
    h.ingest(frameBatch(0.1, new Array(n).fill(60)));
    const { done } = h.ingest([["done", vbool(true)]]);
    expect(done).toBe(true);
    const after = h.ingest(frameBatch(0.2, new Array(n).fill(61)));
    expect(after.frameAdded).toBe(false);
    expect(h.frames).toHaveLength(1);
  });

  it("finds the frame index for a given time", () => {
    const h = new History();
    h.ingest(topoBatch());
    const n = h.topology!.buses.length;
    for (let i = 0; i < 4; i++) h.ingest(frameBatch(i, new Array(n).fill(60)));
    expect(h.frameIndexAt(-0.5)).toBe(-1);
    expect(h.frameIndexAt(0)).toBe(0);
    expect(h.frameIndexAt(2.5)).toBe(2);
    expect(h.frameIndexAt(99)).toBe(3);
  });
});
