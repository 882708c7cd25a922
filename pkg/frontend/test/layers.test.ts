import { beforeEach, describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { parseCaseJson } from "../src/cases.js";
import { LayerStack, StyleError, searchNodes } from "../src/layers.js";

const CASES = join(__dirname, "..", "..", "src", "gridmesh", "fixtures");

const ieee39 = parseCaseJson(readFileSync(join(CASES, "ieee39.json"), "utf-8"));
const gas8 = parseCaseJson(readFileSync(join(CASES, "gas8.json"), "utf-8"));

describe("case parsing", () => {
  it("reads the bundled fixtures", () => {
    expect(ieee39.buses).toHaveLength(39);
    expect(ieee39.lines).toHaveLength(46);
    expect(gas8.buses).toHaveLength(8);
  });

  it("rejects broken documents", () => {
    expect(() => parseCaseJson("not json")).toThrow();
    expect(() => parseCaseJson(JSON.stringify({ name: "x", buses: [], lines: [{ idx: 1, from: 1, to: 2 }] }))).toThrow(
      /unknown bus/,
    );
    expect(() =>
      parseCaseJson(
        JSON.stringify({ name: "x", buses: [{ idx: 1, name: "a", lat: 91, lon: 0 }], lines: [] }),
      ),
    ).toThrow(/lat out of range/);
  });
});

describe("multi-case layer stack", () => {
  let stack: LayerStack;

  beforeEach(() => {
    stack = new LayerStack();
  });

  it("uploads two cases and keeps upload order", () => {
    const a = stack.upload(ieee39);
    const b = stack.upload(gas8);
    expect(stack.layers.map((l) => l.id)).toEqual([a.id, b.id]);
  });

  it("prioritize moves a layer above the others", () => {
    const a = stack.upload(ieee39);
    const b = stack.upload(gas8);
    stack.prioritize(a.id);
    expect(stack.layers.map((l) => l.id)).toEqual([b.id, a.id]);
  });

  it("restyle affects only the chosen layer", () => {
    const a = stack.upload(ieee39);
    const b = stack.upload(gas8);
    stack.restyle(a.id, { nodeColor: "#ff0000", nodeSize: 10 });
    expect(stack.find(a.id)!.style.nodeColor).toBe("#ff0000");
    expect(stack.find(b.id)!.style.nodeColor).not.toBe("#ff0000");
    expect(stack.find(b.id)!.style.nodeSize).not.toBe(10);
  });

  it("rejects out-of-range style values", () => {
    const a = stack.upload(ieee39);
    expect(() => stack.restyle(a.id, { nodeOpacity: 1.5 })).toThrow(StyleError);
    expect(() => stack.restyle(a.id, { nodeSize: 0 })).toThrow(StyleError);
    // failed restyle leaves the style untouched
    expect(stack.find(a.id)!.style.nodeOpacity).toBe(1);
  });

  it("hide toggles visibility without losing style edits", () => {
    const a = stack.upload(ieee39);
    stack.restyle(a.id, { lineColor: "#00ff00" });
    stack.setVisible(a.id, false);
    expect(stack.find(a.id)!.visible).toBe(false);
    expect(stack.find(a.id)!.style.lineColor).toBe("#00ff00");
    stack.setVisible(a.id, true);
    expect(stack.find(a.id)!.visible).toBe(true);
  });

  it("deleting one layer leaves the other", () => {
    const a = stack.upload(ieee39);
    const b = stack.upload(gas8);
    expect(stack.remove(a.id)).toBe(true);
    expect(stack.layers.map((l) => l.id)).toEqual([b.id]);
    expect(stack.remove(a.id)).toBe(false);
  });
});

describe("node search", () => {
  const sources = [
    { layerName: "ieee39", topology: ieee39 },
    { layerName: "gas8", topology: gas8 },
  ];

  it("returns nothing for an empty query", () => {
    expect(searchNodes("", sources)).toEqual([]);
    expect(searchNodes("   ", sources)).toEqual([]);
  });

  it("finds an exact bus name", () => {
    const hits = searchNodes("Bus 17", sources);
    expect(hits).toHaveLength(1);
    expect(hits[0].busIdx).toBe(17);
    expect(hits[0].layerName).toBe("ieee39");
  });

  it("matches case-insensitively across layers", () => {
    const hits = searchNodes("junction", sources);
    expect(hits.length).toBe(3);
    expect(new Set(hits.map((h) => h.layerName))).toEqual(new Set(["gas8"]));
    // "b" hits "Bus ..." in one layer and "Junction B" in the other
    const wide = searchNodes("b", sources);
    expect(new Set(wide.map((h) => h.layerName)).size).toBe(2);
  });
});
