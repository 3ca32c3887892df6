/**
 * Types for the analyzer's JSON export (schema 1) and the loader that
 * validates a file before anything renders. The explorer never mutates a
 * loaded export; rulings live in their own file.
 */

export const SUPPORTED_SCHEMA = 1;

export interface EncodedFp {
  t: "fp";
  method: string;
  context: unknown[][];
}

export interface EncodedKa {
  t: "ka";
  site: unknown[];
  context: unknown[][];
}

export type EncodedAddr =
  | { t: "reg"; fp: EncodedFp; reg: string }
  | { t: "field"; op: { t: "op"; site: unknown[]; context: unknown[][] }; field: string }
  | EncodedKa;

export type EncodedAtom =
  | { t: "obj"; op: { t: "op"; site: unknown[]; context: unknown[][] }; class: string }
  | { t: "int"; value: number }
  | { t: "int-top" }
  | { t: "str"; value: string }
  | { t: "str-top" }
  | { t: "bool"; value: boolean }
  | { t: "bool-top" }
  | { t: "null" }
  | { t: "void" }
  | { t: "kont"; fp: EncodedFp; resume: unknown; next: EncodedKa }
  | { t: "halt-kont" }
  | { t: "method"; name: string };

export type StoreSlice = [EncodedAddr, EncodedAtom[]][];

export interface ExportNode {
  id: string;
  entry: string;
  method: string | null;
  index: number | null;
  synthetic: boolean;
  head: string | null;
  line: number | null;
  fp: EncodedFp;
  ka: EncodedKa;
  root: boolean;
  final: boolean;
  truncated: boolean;
  color: string | null;
  matchedRule: number | null;
  inMethod: string | null;
  writtenTarget: string | null;
  resolvedTargets: string[];
  apiCalls: string[];
  storeSlice: StoreSlice;
}

export interface ExportEdge {
  from: string;
  to: string;
  tag: string;
}

export interface ExportEvent {
  state: string;
  kind: string;
  name: string;
  message: string;
  site: unknown[];
}

export interface HeatRow {
  method: string;
  index: number;
  line: number | null;
  states: number;
  revisits: number;
}

export interface ApiDumpRow {
  api: string;
  callSites: number;
  witnesses: string[];
}

export interface AnalysisExport {
  schema: number;
  source: string | null;
  options: Record<string, unknown>;
  passes: number;
  incomplete: boolean;
  entryPoints: { className: string; methodName: string; reason: string }[];
  nodes: ExportNode[];
  edges: ExportEdge[];
  events: ExportEvent[];
  apiDump: ApiDumpRow[];
  heatMap: HeatRow[];
  permissions: unknown;
  truncationFrontier: string[];
}

export class SchemaError extends Error {
  constructor(
    public readonly found: unknown,
    public readonly supported: number,
  ) {
    super(`unsupported export schema: found ${JSON.stringify(found)}, viewer supports ${supported}`);
  }
}

/** Parse and validate an export document; throws SchemaError on mismatch. */
export function loadExport(text: string): AnalysisExport {
  const doc = JSON.parse(text) as Partial<AnalysisExport>;
  if (doc.schema !== SUPPORTED_SCHEMA) {
    throw new SchemaError(doc.schema, SUPPORTED_SCHEMA);
  }
  if (!Array.isArray(doc.nodes) || !Array.isArray(doc.edges)) {
    throw new SchemaError(doc.schema, SUPPORTED_SCHEMA);
  }
  const ids = new Set<string>();
  for (const node of doc.nodes) {
    if (typeof node.id !== "string") {
      throw new Error("export node without an id");
    }
    ids.add(node.id);
  }
  for (const edge of doc.edges) {
    if (!ids.has(edge.from) || !ids.has(edge.to)) {
      throw new Error(`edge endpoint missing from nodes: ${edge.from} -> ${edge.to}`);
    }
  }
  return doc as AnalysisExport;
}

export function nodeById(graph: AnalysisExport): Map<string, ExportNode> {
  return new Map(graph.nodes.map((n) => [n.id, n]));
}
