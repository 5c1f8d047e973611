import { describe, expect, it } from "vitest";

import { layoutNet } from "../../src/layout.js";
import type { FlatNet } from "../../src/model.js";

function smallNet(): FlatNet {
  return {
    addressSpace: [
      { address: 0, name: "0" },
      { address: 1, name: "1" },
      { address: 2, name: "broker" },
    ],
    places: [
      { id: "0.p", name: "p", kind: "multiset", area: 0, compoundLabel: null, discipline: null },
      { id: "0.q", name: "q", kind: "multiset", area: 0, compoundLabel: null, discipline: null },
      { id: "1.r", name: "r", kind: "queuing", area: 1, compoundLabel: "L", discipline: "double" },
      { id: "broker.b", name: "b", kind: "multiset", area: 2, compoundLabel: null, discipline: null },
    ],
    transitions: [
      { id: "0.t", name: "t", area: 0 },
      { id: "broker.pair", name: "pair", area: 2 },
    ],
    arcs: [
      { id: "a0", source: "0.p", target: "0.t", category: "in", inscription: "(x)" },
      { id: "a1", source: "0.t", target: "0.q", category: "out", inscription: "x" },
      { id: "a2", source: "broker.b", target: "broker.pair", category: "in", inscription: "(y)" },
    ],
  };
}

describe("layoutNet", () => {
  it("positions every node exactly once", () => {
    const layout = layoutNet(smallNet());
    const ids = [...layout.positions.keys()].sort();
    expect(ids).toEqual(["0.p", "0.q", "0.t", "1.r", "broker.b", "broker.pair"]);
  });

  it("layers along arcs inside an area", () => {
    const layout = layoutNet(smallNet());
    const p = layout.positions.get("0.p")!;
    const t = layout.positions.get("0.t")!;
    const q = layout.positions.get("0.q")!;
    expect(p.y).toBeLessThan(t.y);
    expect(t.y).toBeLessThan(q.y);
  });

  it("pins the broker panel centrally under the rank panels", () => {
    const layout = layoutNet(smallNet());
    const broker = layout.panels.find((p) => p.name === "broker")!;
    const ranks = layout.panels.filter((p) => p.name !== "broker");
    const rankBottom = Math.max(...ranks.map((p) => p.y + p.height));
    expect(broker.y).toBeGreaterThan(rankBottom);
    const rowWidth = Math.max(...ranks.map((p) => p.x + p.width));
    const center = broker.x + broker.width / 2;
    expect(Math.abs(center - rowWidth / 2)).toBeLessThan(broker.width);
  });

  it("is deterministic", () => {
    const a = layoutNet(smallNet());
    const b = layoutNet(smallNet());
    expect([...a.positions.entries()]).toEqual([...b.positions.entries()]);
  });

  it("survives loops between nodes", () => {
    const net = smallNet();
    net.arcs.push({ id: "back", source: "0.q", target: "0.t", category: "in", inscription: "(x)" });
    net.arcs.push({ id: "fwd", source: "0.t", target: "0.p", category: "out", inscription: "x" });
    const layout = layoutNet(net);
    expect(layout.positions.size).toBe(6);
  });
});
