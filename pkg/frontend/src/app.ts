/**
 * Map application entry point.
 *
 * Query parameters:
 *   server — websocket address of the broker, e.g. ws://127.0.0.1:8844
 *   group  — workspace group to join (default "geovis")
 *   tiles  — slippy tile URL template; omit for the offline fallback
 *
 * Layer order, bottom to top: tiles, zones, contour, uploaded cases
 * (MultiTop), live topology, search highlight.
 */

import L from "leaflet";
import { WorkspaceClient, ConnectionLost } from "./client.js";
import { CaseTopology, parseCaseJson } from "./cases.js";
import {
  HeatRange,
  Triangulation,
  colormap,
  delaunay,
  interpolate,
  projectMercator,
} from "./contour.js";
import { History } from "./history.js";
import { LayerStack, NewLayer, searchNodes } from "./layers.js";
import { Playback } from "./playback.js";

// a 1x1 sea-blue PNG so the map renders with no tile server reachable
const FALLBACK_TILE =
  "data:image/png;base64,iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNsaLhQDwAFgwJ/lSHvhQAAAABJRU5ErkJggg==";

const params = new URLSearchParams(location.search);
const serverUrl = params.get("server") ?? "ws://127.0.0.1:8844";
const groupName = params.get("group") ?? "geovis";
const tileUrl = params.get("tiles") ?? FALLBACK_TILE;

const map = L.map("map", { center: [42.7, -71.8], zoom: 7 });
L.tileLayer(tileUrl, { maxZoom: 18 }).addTo(map);

// decorative zone overlays bundled with the app (best effort)
fetch("zones.geojson")
  .then((r) => (r.ok ? r.json() : null))
  .then((geo) => {
    if (geo) L.geoJSON(geo, { style: { color: "#88a", weight: 1, fillOpacity: 0.05 } }).addTo(map);
  })
  .catch(() => undefined);

const statusEl = document.getElementById("status")!;
const playbackEl = document.getElementById("playback")! as HTMLDivElement;
const scrubEl = document.getElementById("scrub")! as HTMLInputElement;
const playBtn = document.getElementById("play")! as HTMLButtonElement;
const speedEl = document.getElementById("speed")! as HTMLSelectElement;
const varEl = document.getElementById("variable")! as HTMLSelectElement;
const centerEl = document.getElementById("center")! as HTMLInputElement;
const halfWidthEl = document.getElementById("half-width")! as HTMLInputElement;
const timerEl = document.getElementById("timer")!;
const searchEl = document.getElementById("search")! as HTMLInputElement;
const resultsEl = document.getElementById("results")!;
const uploadEl = document.getElementById("upload")! as HTMLInputElement;
const layerListEl = document.getElementById("layer-list")!;
const retryEl = document.getElementById("retry")! as HTMLButtonElement;

const history = new History();
const stack = new LayerStack();
let playback: Playback | null = null;
let tri: Triangulation | null = null;
let heat: HeatRange = { center: 60, halfWidth: 0.5 };
let activeVar = "freq";

// -- contour canvas overlay ---------------------------------------------------

const contourCanvas = document.createElement("canvas");
contourCanvas.className = "contour-overlay";
map.getPanes().overlayPane.appendChild(contourCanvas);

function drawContour(values: number[] | null) {
  const size = map.getSize();
  contourCanvas.width = size.x;
  contourCanvas.height = size.y;
  const topLeft = map.containerPointToLayerPoint([0, 0]);
  L.DomUtil.setPosition(contourCanvas, topLeft);
  const ctx = contourCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, size.x, size.y);
  if (!tri || !values) return;
  const step = 4; // px; contour detail vs. speed
  const img = ctx.createImageData(size.x, size.y);
  for (let py = 0; py < size.y; py += step) {
    for (let px = 0; px < size.x; px += step) {
      const ll = map.containerPointToLatLng([px + step / 2, py + step / 2]);
      const q = projectMercator(ll.lat, ll.lng);
      const v = interpolate(tri, values, q);
      if (v === null) continue;
      const [r, g, b] = colormap(v, heat);
      for (let dy = 0; dy < step && py + dy < size.y; dy++) {
        for (let dx = 0; dx < step && px + dx < size.x; dx++) {
          const o = ((py + dy) * size.x + (px + dx)) * 4;
          img.data[o] = r;
          img.data[o + 1] = g;
          img.data[o + 2] = b;
          img.data[o + 3] = 150;
        }
      }
    }
  }
  ctx.putImageData(img, 0, 0);
}

// -- topology rendering --------------------------------------------------------

const liveGroup = L.layerGroup().addTo(map);
const multiTopGroups = new Map<number, L.LayerGroup>();
let highlight: L.CircleMarker | null = null;

function renderTopology(topo: CaseTopology, group: L.LayerGroup, style = { nodeColor: "#cc3322", nodeOpacity: 1, nodeSize: 5, lineColor: "#333", lineOpacity: 0.7, lineWidth: 2 }) {
  group.clearLayers();
  const byIdx = new Map(topo.buses.map((b) => [b.idx, b]));
  for (const line of topo.lines) {
    const a = byIdx.get(line.from);
    const b = byIdx.get(line.to);
    if (!a || !b) continue;
    L.polyline(
      [
        [a.lat, a.lon],
        [b.lat, b.lon],
      ],
      { color: style.lineColor, opacity: style.lineOpacity, weight: style.lineWidth },
    ).addTo(group);
  }
  for (const b of topo.buses) {
    L.circleMarker([b.lat, b.lon], {
      radius: style.nodeSize,
      color: style.nodeColor,
      opacity: style.nodeOpacity,
      fillOpacity: style.nodeOpacity * 0.8,
    })
      .bindTooltip(b.name)
      .addTo(group);
  }
}

function renderMultiTop() {
  // rebuild bottom-to-top so later layers draw above earlier ones
  for (const g of multiTopGroups.values()) map.removeLayer(g);
  multiTopGroups.clear();
  for (const layer of stack.layers) {
    if (!layer.visible) continue;
    const g = L.layerGroup().addTo(map);
    renderTopology(layer.topology, g, layer.style);
    multiTopGroups.set(layer.id, g);
  }
  liveGroup.remove();
  liveGroup.addTo(map); // live topology stays on top
  layerListEl.innerHTML = "";
  for (const layer of stack.layers) {
    layerListEl.appendChild(layerRow(layer));
  }
}

function layerRow(layer: NewLayer): HTMLElement {
  const row = document.createElement("div");
  row.className = "layer-row";
  const label = document.createElement("span");
  label.textContent = layer.name;
  row.appendChild(label);
  for (const [text, act] of [
    [layer.visible ? "hide" : "show", () => { stack.setVisible(layer.id, !layer.visible); renderMultiTop(); }],
    ["prioritize", () => { stack.prioritize(layer.id); renderMultiTop(); }],
    ["delete", () => { stack.remove(layer.id); renderMultiTop(); }],
  ] as [string, () => void][]) {
    const btn = document.createElement("button");
    btn.textContent = text;
    btn.onclick = act;
    row.appendChild(btn);
  }
  const color = document.createElement("input");
  color.type = "color";
  color.value = layer.style.nodeColor;
  color.oninput = () => {
    stack.restyle(layer.id, { nodeColor: color.value });
    renderMultiTop();
  };
  row.appendChild(color);
  return row;
}

// -- live stream -----------------------------------------------------------------

let client: WorkspaceClient | null = null;

async function runLive() {
  statusEl.textContent = `connecting to ${serverUrl} ...`;
  retryEl.hidden = true;
  try {
    client = await WorkspaceClient.connect(new WebSocket(serverUrl) as never);
  } catch (e) {
    statusEl.textContent = `connection failed: ${e}`;
    retryEl.hidden = false;
    return;
  }
  client.onDisconnect = () => {
    if (!history.done) {
      statusEl.textContent = "connection lost";
      retryEl.hidden = false;
    }
  };
  await client.join([groupName]);
  statusEl.textContent = `waiting for data in group "${groupName}" ...`;
  try {
    while (!history.done) {
      const pending = await client.wait(30_000);
      if (!pending) continue;
      const batch = await client.sync();
      const { topologyChanged, frameAdded } = history.ingest(batch);
      if (topologyChanged && history.topology) {
        renderTopology(history.topology, liveGroup);
        const pts = history.topology.buses.map((b) => projectMercator(b.lat, b.lon));
        tri = history.topology.buses.length >= 3 ? delaunay(pts) : null;
        map.fitBounds(L.latLngBounds(history.topology.buses.map((b) => [b.lat, b.lon])));
        statusEl.textContent = `live: ${history.topology.name}`;
      }
      if (frameAdded) {
        const frame = history.frames[history.frames.length - 1];
        drawContour(frame.vectors.get(activeVar) ?? null);
        timerEl.textContent = frame.t.toFixed(2);
      }
    }
  } catch (e) {
    if (!(e instanceof ConnectionLost) || !history.done) {
      statusEl.textContent = `stream error: ${e}`;
      retryEl.hidden = false;
      return;
    }
  }
  statusEl.textContent = "stream finished";
  startPlayback();
}

// -- playback --------------------------------------------------------------------

function startPlayback() {
  playback = new Playback(history);
  playbackEl.hidden = false;
  scrubEl.min = String(playback.startT);
  scrubEl.max = String(playback.endT);
  scrubEl.step = "any";
  varEl.innerHTML = "";
  for (const name of history.variables()) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = name;
    varEl.appendChild(opt);
  }
  varEl.value = activeVar;
  let lastFrame = -2;
  const tick = () => {
    if (!playback) return;
    const now = performance.now();
    const idx = playback.frameAt(now);
    if (idx !== lastFrame) {
      lastFrame = idx;
      const values = idx >= 0 ? history.frames[idx].vectors.get(activeVar) ?? null : null;
      drawContour(values);
    }
    scrubEl.value = String(playback.currentT(now));
    timerEl.textContent = playback.timerValue(now).toFixed(2);
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
}

playBtn.onclick = () => {
  if (!playback) return;
  const now = performance.now();
  if (playback.isPlaying) {
    playback.pause(now);
    playBtn.textContent = "play";
  } else {
    playback.play(now);
    playBtn.textContent = "pause";
  }
};
scrubEl.oninput = () => playback?.scrub(Number(scrubEl.value), performance.now());
speedEl.onchange = () => playback?.setSpeed(Number(speedEl.value), performance.now());
varEl.onchange = () => {
  activeVar = varEl.value;
};
const onHeatChange = () => {
  const center = Number(centerEl.value);
  const halfWidth = Number(halfWidthEl.value);
  if (halfWidth > 0) heat = { center, halfWidth };
};
centerEl.onchange = onHeatChange;
halfWidthEl.onchange = onHeatChange;
retryEl.onclick = () => void runLive();

// -- upload + search ----------------------------------------------------------------

uploadEl.onchange = async () => {
  for (const file of uploadEl.files ?? []) {
    try {
      stack.upload(parseCaseJson(await file.text()));
    } catch (e) {
      statusEl.textContent = `upload failed: ${e}`;
    }
  }
  renderMultiTop();
};

searchEl.oninput = () => {
  const sources = [];
  if (history.topology) sources.push({ layerName: history.topology.name, topology: history.topology });
  for (const layer of stack.layers) {
    if (layer.visible) sources.push({ layerName: layer.name, topology: layer.topology });
  }
  const hits = searchNodes(searchEl.value, sources);
  resultsEl.innerHTML = "";
  resultsEl.toggleAttribute("hidden", hits.length === 0);
  for (const hit of hits.slice(0, 20)) {
    const row = document.createElement("div");
    row.textContent = `${hit.busName} (${hit.layerName})`;
    row.onclick = () => {
      map.setView([hit.lat, hit.lon], Math.max(map.getZoom(), 10));
      highlight?.remove();
      highlight = L.circleMarker([hit.lat, hit.lon], { radius: 12, color: "#ff0" }).addTo(map);
    };
    resultsEl.appendChild(row);
  }
};

map.on("moveend zoomend resize", () => {
  if (playback) {
    const idx = playback.frameAt(performance.now());
    drawContour(idx >= 0 ? history.frames[idx].vectors.get(activeVar) ?? null : null);
  } else if (history.frames.length) {
    drawContour(history.frames[history.frames.length - 1].vectors.get(activeVar) ?? null);
  }
});

void runLive();
