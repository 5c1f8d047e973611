import type { FlatNet } from "./model.js";

export interface NodePosition {
  id: string;
  kind: "place" | "transition";
  x: number;
  y: number;
}

export interface AreaPanel {
  area: number;
  name: string;
  x: number;
  y: number;
  width: number;
  height: number;
  nodes: NodePosition[];
}

export interface Layout {
  panels: AreaPanel[];
  positions: Map<string, { x: number; y: number }>;
  width: number;
  height: number;
}

const COL_W = 130;
const ROW_H = 72;
const PAD = 28;
const PANEL_GAP = 24;

/** Longest-path layering of one area's nodes over its internal arcs.
 * Deterministic: ties resolve by node id; cycles are cut by visit order.
 */
function layerArea(ids: string[], edges: [string, string][]): Map<string, number> {
  const within = new Set(ids);
  const out = new Map<string, string[]>();
  for (const [src, dst] of edges) {
    if (within.has(src) && within.has(dst)) {
      const list = out.get(src) ?? [];
      list.push(dst);
      out.set(src, list);
    }
  }
  const layer = new Map<string, number>();
  const visiting = new Set<string>();

  const assign = (id: string, depth: number) => {
    if (visiting.has(id)) return; // back edge of a loop
    if ((layer.get(id) ?? -1) >= depth) return;
    layer.set(id, depth);
    visiting.add(id);
    for (const next of (out.get(id) ?? []).slice().sort()) {
      assign(next, depth + 1);
    }
    visiting.delete(id);
  };

  const targets = new Set(edges.filter(([s, d]) => within.has(s) && within.has(d))
    .map(([, d]) => d));
  const roots = ids.filter((id) => !targets.has(id)).sort();
  for (const root of roots.length ? roots : ids.slice().sort()) {
    assign(root, 0);
  }
  for (const id of ids) {
    if (!layer.has(id)) assign(id, 0);
  }
  return layer;
}

/** Panels per area, ranks in a row with the broker pinned centrally
 * underneath them.
 */
export function layoutNet(net: FlatNet): Layout {
  const areas = net.addressSpace.map((a) => a.address);
  const names = new Map(net.addressSpace.map((a) => [a.address, a.name]));
  const kindOf = new Map<string, "place" | "transition">();
  const areaOf = new Map<string, number>();
  for (const p of net.places) {
    kindOf.set(p.id, "place");
    areaOf.set(p.id, p.area);
  }
  for (const t of net.transitions) {
    kindOf.set(t.id, "transition");
    areaOf.set(t.id, t.area);
  }
  const edges: [string, string][] = net.arcs
    .filter((a) => a.category !== "cf")
    .map((a) => [a.source, a.target]);

  const panels: AreaPanel[] = [];
  for (const area of areas) {
    const ids = [...kindOf.keys()].filter((id) => areaOf.get(id) === area).sort();
    if (!ids.length) continue;
    const layers = layerArea(ids, edges);
    const byLayer = new Map<number, string[]>();
    for (const id of ids) {
      const l = layers.get(id) ?? 0;
      const list = byLayer.get(l) ?? [];
      list.push(id);
      byLayer.set(l, list);
    }
    const nodes: NodePosition[] = [];
    let maxCols = 1;
    const layerKeys = [...byLayer.keys()].sort((a, b) => a - b);
    for (const l of layerKeys) {
      const row = byLayer.get(l)!.sort();
      maxCols = Math.max(maxCols, row.length);
      row.forEach((id, i) => {
        nodes.push({
          id,
          kind: kindOf.get(id)!,
          x: PAD + i * COL_W + COL_W / 2,
          y: PAD + l * ROW_H + ROW_H / 2,
        });
      });
    }
    panels.push({
      area,
      name: names.get(area) ?? String(area),
      x: 0,
      y: 0,
      width: PAD * 2 + maxCols * COL_W,
      height: PAD * 2 + layerKeys.length * ROW_H + 14,
      nodes,
    });
  }

  const rankPanels = panels.filter((p) => p.name !== "broker");
  const brokerPanels = panels.filter((p) => p.name === "broker");

  let x = 0;
  let rowHeight = 0;
  for (const panel of rankPanels) {
    panel.x = x;
    panel.y = 0;
    x += panel.width + PANEL_GAP;
    rowHeight = Math.max(rowHeight, panel.height);
  }
  const totalRankWidth = Math.max(x - PANEL_GAP, 0);
  let width = totalRankWidth;
  let height = rowHeight;
  for (const panel of brokerPanels) {
    panel.x = Math.max((totalRankWidth - panel.width) / 2, 0);
    panel.y = rowHeight + PANEL_GAP;
    width = Math.max(width, panel.x + panel.width);
    height = panel.y + panel.height;
  }

  const positions = new Map<string, { x: number; y: number }>();
  for (const panel of panels) {
    for (const node of panel.nodes) {
      positions.set(node.id, { x: panel.x + node.x, y: panel.y + node.y });
    }
  }
  return { panels, positions, width: width + 2, height: height + 2 };
}
