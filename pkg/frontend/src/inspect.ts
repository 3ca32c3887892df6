/**
 * State inspection: walk the continuation chain through a node's store
 * slice and shape the slice into a displayable tree. Works on the export
 * alone; nothing here talks back to the analyzer.
 */

import type {
  AnalysisExport,
  EncodedAddr,
  EncodedAtom,
  EncodedKa,
  ExportNode,
} from "./schema.js";

/** Stable deep key: sorts object keys at every level. */
function deepKey(value: unknown): string {
  if (Array.isArray(value)) {
    return "[" + value.map(deepKey).join(",") + "]";
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => JSON.stringify(k) + ":" + deepKey(v));
    return "{" + entries.join(",") + "}";
  }
  return JSON.stringify(value);
}

export interface KontFrame {
  kind: "fun" | "halt";
  method?: string;
  resume?: unknown;
}

/**
 * Follow the continuation addresses through the slice: each level holds
 * the frames stored at the current address set, halting on the halt
 * continuation or a revisited address.
 */
export function kontChain(node: ExportNode, maxDepth = 32): KontFrame[][] {
  const slice = new Map<string, EncodedAtom[]>();
  for (const [addr, atoms] of node.storeSlice) {
    slice.set(deepKey(addr), atoms);
  }
  const levels: KontFrame[][] = [];
  let frontier: EncodedKa[] = [node.ka];
  const seen = new Set<string>();
  for (let depth = 0; depth < maxDepth && frontier.length > 0; depth++) {
    const frames: KontFrame[] = [];
    const next: EncodedKa[] = [];
    for (const ka of frontier) {
      const key = deepKey(ka);
      if (seen.has(key)) {
        continue;
      }
      seen.add(key);
      for (const atom of slice.get(key) ?? []) {
        if (atom.t === "kont") {
          frames.push({ kind: "fun", method: atom.fp.method, resume: atom.resume });
          next.push(atom.next);
        } else if (atom.t === "halt-kont") {
          frames.push({ kind: "halt" });
        }
      }
    }
    if (frames.length === 0) {
      break;
    }
    levels.push(frames);
    frontier = next;
  }
  return levels;
}

export interface SliceEntry {
  label: string;
  values: string[];
}

export function describeAtom(atom: EncodedAtom): string {
  switch (atom.t) {
    case "obj":
      return `object ${atom.class} @ ${JSON.stringify(atom.op.site)}`;
    case "int":
      return String(atom.value);
    case "int-top":
      return "int: unknown";
    case "str":
      return JSON.stringify(atom.value);
    case "str-top":
      return "string: unknown";
    case "bool":
      return String(atom.value);
    case "bool-top":
      return "boolean: unknown";
    case "null":
      return "null";
    case "void":
      return "void";
    case "kont":
      return `resume in ${atom.fp.method}`;
    case "halt-kont":
      return "halt";
    case "method":
      return `method ${atom.name}`;
  }
}

export function describeAddr(addr: EncodedAddr): string {
  if (addr.t === "reg") {
    return `${addr.fp.method} . ${addr.reg}`;
  }
  if (addr.t === "field") {
    return `${JSON.stringify(addr.op.site)} . ${addr.field}`;
  }
  return `kont @ ${JSON.stringify(addr.site)}`;
}

/** The reachable store slice as labeled groups for an expandable tree. */
export function sliceTree(node: ExportNode): { group: string; entries: SliceEntry[] }[] {
  const groups: Record<string, SliceEntry[]> = { registers: [], fields: [], continuations: [] };
  for (const [addr, atoms] of node.storeSlice) {
    const entry: SliceEntry = {
      label: describeAddr(addr),
      values: atoms.map(describeAtom),
    };
    if (addr.t === "reg") {
      groups.registers.push(entry);
    } else if (addr.t === "field") {
      groups.fields.push(entry);
    } else {
      groups.continuations.push(entry);
    }
  }
  return Object.entries(groups)
    .filter(([, entries]) => entries.length > 0)
    .map(([group, entries]) => ({
      group,
      entries: entries.sort((a, b) => a.label.localeCompare(b.label)),
    }));
}

/** Heat intensity per node in [0, 1], from the per-statement state counts. */
export function heatIntensity(graph: AnalysisExport): Map<string, number> {
  const byPos = new Map<string, number>();
  let max = 1;
  for (const row of graph.heatMap) {
    byPos.set(`${row.method}@${row.index}`, row.states);
    max = Math.max(max, row.states);
  }
  const out = new Map<string, number>();
  for (const node of graph.nodes) {
    const count =
      node.method !== null && node.index !== null && !node.synthetic
        ? byPos.get(`${node.method}@${node.index}`) ?? 0
        : 0;
    out.set(node.id, count / max);
  }
  return out;
}

export { deepKey };
