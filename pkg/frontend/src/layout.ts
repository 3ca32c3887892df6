/**
 * Deterministic force layout: a seeded PRNG places nodes, then a fixed
 * number of spring/repulsion iterations relaxes them. Same graph, same
 * seed, same pixels.
 */

import type { AnalysisExport } from "./schema.js";

export interface LayoutPoint {
  id: string;
  x: number;
  y: number;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function layoutGraph(
  graph: AnalysisExport,
  width = 900,
  height = 600,
  seed = 42,
  iterations = 150,
): LayoutPoint[] {
  const ids = [...graph.nodes.map((n) => n.id)].sort();
  const rand = mulberry32(seed);
  const index = new Map(ids.map((id, i) => [id, i]));
  const xs = ids.map(() => (rand() - 0.5) * width * 0.8 + width / 2);
  const ys = ids.map(() => (rand() - 0.5) * height * 0.8 + height / 2);

  const springs: [number, number][] = [];
  for (const e of [...graph.edges].sort((a, b) =>
    (a.from + a.to + a.tag).localeCompare(b.from + b.to + b.tag),
  )) {
    const i = index.get(e.from);
    const j = index.get(e.to);
    if (i !== undefined && j !== undefined && i !== j) {
      springs.push([i, j]);
    }
  }

  const n = ids.length;
  const spring = 0.02;
  const springLength = 80;
  const repulsion = 2000;
  for (let it = 0; it < iterations; it++) {
    const fx = new Array<number>(n).fill(0);
    const fy = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = xs[i] - xs[j];
        let dy = ys[i] - ys[j];
        const d2 = dx * dx + dy * dy + 0.01;
        const f = repulsion / d2;
        const d = Math.sqrt(d2);
        dx /= d;
        dy /= d;
        fx[i] += dx * f;
        fy[i] += dy * f;
        fx[j] -= dx * f;
        fy[j] -= dy * f;
      }
    }
    for (const [i, j] of springs) {
      const dx = xs[j] - xs[i];
      const dy = ys[j] - ys[i];
      const d = Math.sqrt(dx * dx + dy * dy) + 0.01;
      const f = spring * (d - springLength);
      fx[i] += (dx / d) * f;
      fy[i] += (dy / d) * f;
      fx[j] -= (dx / d) * f;
      fy[j] -= (dy / d) * f;
    }
    const cool = 1 - it / iterations;
    for (let i = 0; i < n; i++) {
      xs[i] += Math.max(-10, Math.min(10, fx[i])) * cool;
      ys[i] += Math.max(-10, Math.min(10, fy[i])) * cool;
      xs[i] = Math.max(20, Math.min(width - 20, xs[i]));
      ys[i] = Math.max(20, Math.min(height - 20, ys[i]));
    }
  }
  return ids.map((id, i) => ({ id, x: xs[i], y: ys[i] }));
}
