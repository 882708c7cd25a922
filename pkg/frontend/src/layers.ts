/**
 * Layer model for the map view.
 *
 * The stack is fixed at the bottom and top: Tile (base map), Zone
 * (decorative polygon overlays), Contour (heat map), Topology (live
 * system markers above the contour), Search. Uploaded cases become
 * MultiTop layers stacked between Contour and Topology; their relative
 * order is user-controlled and they never get a contour of their own.
 */

import { CaseTopology } from "./cases.js";

export interface LayerStyle {
  nodeColor: string;
  nodeOpacity: number; // 0..1
  nodeSize: number; // px, > 0
  lineColor: string;
  lineOpacity: number; // 0..1
  lineWidth: number; // px, > 0
}

export const DEFAULT_STYLE: LayerStyle = {
  nodeColor: "#2266cc",
  nodeOpacity: 1.0,
  nodeSize: 6,
  lineColor: "#555555",
  lineOpacity: 0.8,
  lineWidth: 2,
};

export class StyleError extends Error {}

export function checkStyle(s: LayerStyle): void {
  if (!(s.nodeOpacity >= 0 && s.nodeOpacity <= 1)) throw new StyleError("node opacity must be 0..1");
  if (!(s.lineOpacity >= 0 && s.lineOpacity <= 1)) throw new StyleError("line opacity must be 0..1");
  if (!(s.nodeSize > 0)) throw new StyleError("node size must be > 0");
  if (!(s.lineWidth > 0)) throw new StyleError("line width must be > 0");
}

let nextLayerId = 1;

/** One uploaded case: its topology plus per-layer styling state. */
export class NewLayer {
  readonly id: number;
  visible = true;
  style: LayerStyle = { ...DEFAULT_STYLE };

  constructor(public readonly topology: CaseTopology) {
    this.id = nextLayerId++;
  }

  get name(): string {
    return this.topology.name;
  }
}

export class LayerStack {
  /** bottom-to-top; index 0 draws first */
  private multiTop: NewLayer[] = [];

  get layers(): readonly NewLayer[] {
    return this.multiTop;
  }

  upload(topology: CaseTopology): NewLayer {
    const layer = new NewLayer(topology);
    this.multiTop.push(layer);
    return layer;
  }

  find(id: number): NewLayer | undefined {
    return this.multiTop.find((l) => l.id === id);
  }

  remove(id: number): boolean {
    const i = this.multiTop.findIndex((l) => l.id === id);
    if (i < 0) return false;
    this.multiTop.splice(i, 1);
    return true;
  }

  /** Move the layer above all other uploaded layers. */
  prioritize(id: number): boolean {
    const i = this.multiTop.findIndex((l) => l.id === id);
    if (i < 0) return false;
    const [layer] = this.multiTop.splice(i, 1);
    this.multiTop.push(layer);
    return true;
  }

  restyle(id: number, patch: Partial<LayerStyle>): void {
    const layer = this.find(id);
    if (!layer) return;
    const next = { ...layer.style, ...patch };
    checkStyle(next);
    layer.style = next;
  }

  setVisible(id: number, visible: boolean): void {
    const layer = this.find(id);
    if (layer) layer.visible = visible;
  }
}

export interface SearchHit {
  layerName: string;
  busIdx: number;
  busName: string;
  lat: number;
  lon: number;
}

/**
 * Case-insensitive substring match on bus names across the given
 * topologies (the live one plus visible uploads). Empty query → no hits.
 */
export function searchNodes(query: string, sources: { layerName: string; topology: CaseTopology }[]): SearchHit[] {
  const q = query.trim().toLowerCase();
  if (!q) return [];
  const hits: SearchHit[] = [];
  for (const { layerName, topology } of sources) {
    for (const b of topology.buses) {
      if (b.name.toLowerCase().includes(q)) {
        hits.push({ layerName, busIdx: b.idx, busName: b.name, lat: b.lat, lon: b.lon });
      }
    }
  }
  return hits;
}
