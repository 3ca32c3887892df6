/**
 * Browser wiring for the explorer: load an export file, draw the state
 * graph, filter, inspect, and record rulings. All real logic lives in the
 * pure modules; this file only touches the DOM.
 */

import { filterUsesApi, filterUsesName, knownApis, suggestedPredicateStub } from "./filters.js";
import { heatIntensity, kontChain, sliceTree } from "./inspect.js";
import { layoutGraph } from "./layout.js";
import { RulingStore, VERDICTS, Verdict } from "./rulings.js";
import { AnalysisExport, ExportNode, loadExport, nodeById, SchemaError } from "./schema.js";

const SVG_NS = "http://www.w3.org/2000/svg";

interface ViewState {
  graph: AnalysisExport;
  nodes: Map<string, ExportNode>;
  rulings: RulingStore;
  selected: string | null;
  highlighted: Set<string> | null;
  heatOn: boolean;
}

let view: ViewState | null = null;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function banner(message: string, isError = false): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message;
  box.className = isError ? "banner error" : "banner";
  box.style.display = message ? "block" : "none";
}

function fillColorOf(node: ExportNode): string {
  if (node.color) {
    const head = node.color.split(",")[0].trim();
    return head;
  }
  return "#f8f8f8";
}

function render(): void {
  if (!view) {
    return;
  }
  const { graph } = view;
  const svg = el<HTMLElement>("graph") as unknown as SVGSVGElement;
  while (svg.firstChild) {
    svg.removeChild(svg.firstChild);
  }
  const points = new Map(layoutGraph(graph).map((p) => [p.id, p]));
  const heat = view.heatOn ? heatIntensity(graph) : null;

  for (const edge of graph.edges) {
    const a = points.get(edge.from);
    const b = points.get(edge.to);
    if (!a || !b) {
      continue;
    }
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("class", "edge");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = edge.tag;
    line.appendChild(title);
    svg.appendChild(line);
  }

  for (const node of graph.nodes) {
    const p = points.get(node.id);
    if (!p) {
      continue;
    }
    const g = document.createElementNS(SVG_NS, "g");
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.x));
    circle.setAttribute("cy", String(p.y));
    circle.setAttribute("r", node.root ? "11" : "8");
    circle.setAttribute("fill", fillColorOf(node));
    if (heat) {
      circle.setAttribute("fill-opacity", String(0.25 + 0.75 * (heat.get(node.id) ?? 0)));
    }
    let cls = "node";
    if (node.final) {
      cls += " final";
    }
    if (node.truncated) {
      cls += " truncated";
    }
    if (view.highlighted && view.highlighted.has(node.id)) {
      cls += " highlighted";
    }
    if (view.selected === node.id) {
      cls += " selected";
    }
    circle.setAttribute("class", cls);
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${node.head ?? "(final)"}\n${node.id}`;
    circle.appendChild(title);
    circle.addEventListener("click", () => {
      inspect(node.id);
    });
    g.appendChild(circle);
    if (node.truncated) {
      const badge = document.createElementNS(SVG_NS, "text");
      badge.setAttribute("x", String(p.x + 10));
      badge.setAttribute("y", String(p.y - 10));
      badge.setAttribute("class", "badge");
      badge.textContent = "pruned";
      g.appendChild(badge);
    }
    svg.appendChild(g);
  }
}

function inspect(stateKey: string): void {
  if (!view) {
    return;
  }
  const node = view.nodes.get(stateKey);
  const panel = el<HTMLDivElement>("detail");
  if (!node) {
    panel.innerHTML = "";
    banner(`state not found: ${stateKey}`, true);
    return;
  }
  banner("");
  view.selected = stateKey;
  panel.innerHTML = "";

  const heading = document.createElement("h3");
  heading.textContent = node.head ?? "(final state)";
  panel.appendChild(heading);

  const meta = document.createElement("dl");
  const pairs: [string, string][] = [
    ["state", node.id],
    ["entry", node.entry],
    ["position", node.method === null ? "-" : `${node.method} @ ${node.index}${node.synthetic ? " (synthesized)" : ""}`],
    ["source line", node.line === null ? "-" : String(node.line)],
    ["frame", `${node.fp.method} ${JSON.stringify(node.fp.context)}`],
    ["flags", [node.root ? "root" : "", node.final ? "final" : "", node.truncated ? "truncated" : ""].filter(Boolean).join(" ") || "-"],
    ["color", node.color ?? "-"],
  ];
  for (const [k, v] of pairs) {
    const dt = document.createElement("dt");
    dt.textContent = k;
    const dd = document.createElement("dd");
    dd.textContent = v;
    meta.appendChild(dt);
    meta.appendChild(dd);
  }
  panel.appendChild(meta);

  const kontsHeading = document.createElement("h4");
  kontsHeading.textContent = "continuation chain";
  panel.appendChild(kontsHeading);
  const chain = document.createElement("ol");
  for (const level of kontChain(node)) {
    const li = document.createElement("li");
    li.textContent = level
      .map((f) => (f.kind === "halt" ? "halt" : `return to ${f.method}`))
      .join(" | ");
    chain.appendChild(li);
  }
  panel.appendChild(chain);

  const storeHeading = document.createElement("h4");
  storeHeading.textContent = "reachable store slice";
  panel.appendChild(storeHeading);
  const tree = sliceTree(node);
  if (tree.length === 0) {
    const empty = document.createElement("p");
    empty.textContent = "no reachable bindings";
    panel.appendChild(empty);
  }
  for (const group of tree) {
    const details = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = `${group.group} (${group.entries.length})`;
    details.appendChild(summary);
    const ul = document.createElement("ul");
    for (const entry of group.entries) {
      const li = document.createElement("li");
      li.textContent = `${entry.label} = { ${entry.values.join(", ")} }`;
      ul.appendChild(li);
    }
    details.appendChild(ul);
    panel.appendChild(details);
  }

  const current = view.rulings.currentFor(stateKey);
  el<HTMLDivElement>("ruling-current").textContent = current
    ? `current ruling: ${current.verdict} (${current.author || "anonymous"}) ${current.note}`
    : "no ruling recorded";
  render();
}

function applyFilter(): void {
  if (!view) {
    return;
  }
  const kind = el<HTMLSelectElement>("filter-kind").value;
  const arg = el<HTMLInputElement>("filter-arg").value.trim();
  if (!arg) {
    view.highlighted = null;
    render();
    return;
  }
  const matches =
    kind === "uses-api"
      ? filterUsesApi(view.graph, arg)
      : filterUsesName(view.graph, arg);
  view.highlighted = new Set(matches.map((n) => n.id));
  banner(`${matches.length} state(s) match`);
  render();
}

function download(name: string, text: string): void {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

export function boot(): void {
  el<HTMLInputElement>("export-file").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) {
      return;
    }
    try {
      const graph = loadExport(await file.text());
      view = {
        graph,
        nodes: nodeById(graph),
        rulings: new RulingStore(new Set(graph.nodes.map((n) => n.id))),
        selected: null,
        highlighted: null,
        heatOn: false,
      };
      banner(
        `${graph.nodes.length} states, ${graph.edges.length} transitions` +
          (graph.incomplete ? " (analysis incomplete)" : ""),
      );
      render();
    } catch (err) {
      if (err instanceof SchemaError) {
        banner(err.message, true);
      } else {
        banner(`could not load export: ${String(err)}`, true);
      }
    }
  });

  el<HTMLButtonElement>("filter-run").addEventListener("click", applyFilter);
  el<HTMLInputElement>("heat-toggle").addEventListener("change", (ev) => {
    if (view) {
      view.heatOn = (ev.target as HTMLInputElement).checked;
      render();
    }
  });

  const verdictSelect = el<HTMLSelectElement>("ruling-verdict");
  for (const v of VERDICTS) {
    const opt = document.createElement("option");
    opt.value = v;
    opt.textContent = v;
    verdictSelect.appendChild(opt);
  }
  el<HTMLButtonElement>("ruling-record").addEventListener("click", () => {
    if (!view || !view.selected) {
      banner("select a state first", true);
      return;
    }
    try {
      view.rulings.record(
        view.selected,
        verdictSelect.value as Verdict,
        el<HTMLInputElement>("ruling-note").value,
        el<HTMLInputElement>("ruling-author").value,
      );
      inspect(view.selected);
    } catch (err) {
      banner(String(err), true);
    }
  });
  el<HTMLButtonElement>("ruling-export").addEventListener("click", () => {
    if (view) {
      download("rulings.json", view.rulings.exportJson());
    }
  });
  el<HTMLInputElement>("ruling-import").addEventListener("change", async (ev) => {
    if (!view) {
      return;
    }
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    try {
      view.rulings.importJson(await file.text());
      banner(`imported ${view.rulings.allHistory().length} ruling(s)`);
      if (view.selected) {
        inspect(view.selected);
      }
    } catch (err) {
      banner(String(err), true);
    }
  });
  el<HTMLButtonElement>("predicate-stub").addEventListener("click", () => {
    if (view) {
      download("suggested-predicates.scm", suggestedPredicateStub(knownApis(view.graph)));
    }
  });
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
