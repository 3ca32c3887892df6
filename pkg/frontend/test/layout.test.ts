import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { layoutGraph } from "../src/layout.js";
import { loadExport } from "../src/schema.js";

const graph = loadExport(
  readFileSync(new URL("./fixtures/export_calls.json", import.meta.url), "utf-8"),
);

describe("layoutGraph", () => {
  it("is deterministic for a fixed seed", () => {
    const a = layoutGraph(graph, 900, 600, 7);
    const b = layoutGraph(graph, 900, 600, 7);
    expect(a).toEqual(b);
  });

  it("varies with the seed but stays in bounds", () => {
    const a = layoutGraph(graph, 900, 600, 7);
    const c = layoutGraph(graph, 900, 600, 8);
    expect(a).not.toEqual(c);
    for (const p of a) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.x).toBeLessThanOrEqual(900);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeLessThanOrEqual(600);
    }
  });

  it("lays out every node exactly once", () => {
    const a = layoutGraph(graph);
    expect(a.map((p) => p.id).sort()).toEqual(graph.nodes.map((n) => n.id).sort());
  });
});
