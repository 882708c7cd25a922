/**
 * History buffer: every frame received during a live stream, plus the
 * topology snapshot, kept for post-stream playback. Append-only while
 * streaming; frozen once the stream's done marker arrives.
 */

import { CaseTopology, topologyFromVars } from "./cases.js";
import { NamedValues, Value, arrayToNumbers, bitsToDouble } from "./values.js";

export interface StoredFrame {
  t: number;
  /** per-variable per-bus vectors captured in this frame */
  vectors: Map<string, number[]>;
}

export class History {
  topology: CaseTopology | null = null;
  frames: StoredFrame[] = [];
  done = false;

  get span(): number {
    if (this.frames.length < 2) return 0;
    return this.frames[this.frames.length - 1].t - this.frames[0].t;
  }

  /** Variables that have arrived as per-bus vectors at least once. */
  variables(): string[] {
    const names = new Set<string>();
    for (const f of this.frames) for (const k of f.vectors.keys()) names.add(k);
    return [...names].sort();
  }

  /**
   * Fold one sync batch into the history. Returns what changed so the
   * caller can redraw only the affected layers.
   */
  ingest(batch: NamedValues): { topologyChanged: boolean; frameAdded: boolean; done: boolean } {
    if (this.done) return { topologyChanged: false, frameAdded: false, done: true };
    const byName = new Map<string, Value>(batch);

    let topologyChanged = false;
    if (byName.has("topo_bus") || byName.has("topo_line") || byName.has("topo_name")) {
      const topo = topologyFromVars(byName);
      if (topo) {
        this.topology = topo;
        topologyChanged = true;
      }
    }

    let frameAdded = false;
    const ts = byName.get("ts");
    if (ts && ts.kind === "double" && this.topology) {
      const n = this.topology.buses.length;
      const vectors = new Map<string, number[]>();
      for (const [name, v] of byName) {
        if (name === "ts" || name.startsWith("topo_")) continue;
        if (v.kind === "array" && v.dims.length === 1 && v.dims[0] === n) {
          vectors.set(name, arrayToNumbers(v));
        }
      }
      if (vectors.size > 0) {
        this.frames.push({ t: bitsToDouble(ts.bits), vectors });
        frameAdded = true;
      }
    }

    const doneVar = byName.get("done");
    if (doneVar && doneVar.kind === "bool" && doneVar.v) this.done = true;
    return { topologyChanged, frameAdded, done: this.done };
  }

  /** Index of the latest frame at or before time t (-1 before the first). */
  frameIndexAt(t: number): number {
    let lo = 0;
    let hi = this.frames.length - 1;
    let ans = -1;
    while (lo <= hi) {
      const mid = (lo + hi) >> 1;
      if (this.frames[mid].t <= t) {
        ans = mid;
        lo = mid + 1;
      } else {
        hi = mid - 1;
      }
    }
    return ans;
  }
}
