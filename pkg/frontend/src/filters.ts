/**
 * Node filters mirroring the analyzer's predicate primitives exactly: a
 * filter must select the same node set the engine would color for the same
 * argument. The export carries each node's written invoke target, resolved
 * callees, and enclosing method, which is all the primitives consult.
 */

import type { AnalysisExport, ExportNode } from "./schema.js";

export function usesApi(node: ExportNode, apiName: string): boolean {
  if (node.writtenTarget === null) {
    return false;
  }
  return node.writtenTarget === apiName || node.resolvedTargets.includes(apiName);
}

export function usesName(node: ExportNode, qualifiedName: string): boolean {
  if (node.inMethod === qualifiedName) {
    return true;
  }
  if (node.writtenTarget !== null) {
    return (
      node.writtenTarget === qualifiedName ||
      node.resolvedTargets.includes(qualifiedName)
    );
  }
  return false;
}

export function filterUsesApi(graph: AnalysisExport, apiName: string): ExportNode[] {
  return graph.nodes.filter((n) => usesApi(n, apiName));
}

export function filterUsesName(graph: AnalysisExport, qualifiedName: string): ExportNode[] {
  return graph.nodes.filter((n) => usesName(n, qualifiedName));
}

export function coloredNodes(graph: AnalysisExport): ExportNode[] {
  return graph.nodes.filter((n) => n.color !== null);
}

/** Reachable API names, for filter suggestions and predicate stubs. */
export function knownApis(graph: AnalysisExport): string[] {
  return graph.apiDump.map((row) => row.api);
}

/**
 * A starting predicate file covering the selected APIs; the explorer does
 * not edit predicates itself, it hands this stub back to the analyst.
 */
export function suggestedPredicateStub(apis: string[]): string {
  const lines = apis.map(
    (api) => `(color (uses-api "${api}") "red,colorscheme=set312")`,
  );
  return lines.join("\n") + (lines.length ? "\n" : "");
}
