"""Analysis outputs: permission findings, API dump, heat map, DOT graph, and
the canonical JSON export consumed by the explorer frontend.

Every output is deterministic byte-for-byte for a fixed analysis result:
collections are sorted by canonical keys before rendering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .domain import (
    Store,
    encode_fp,
    encode_ka,
    encode_store,
)
from .engine import AnalysisResult, NodeRecord, StateGraph, abstract_gc, state_facts
from .frontend import CodeRef, Line, MethodDef, SynthCode, stmt_to_text
from .machine import Machine
from .predicates import PredicateProgram, StateFacts, StateVerdict, evaluate

SCHEMA_VERSION = 1


class PermissionMapError(Exception):
    """Malformed permission map or manifest file; carries the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


def load_permission_map(text: str) -> dict[str, set[str]]:
    """One `api-name<TAB>PERMISSION` pair per line; `#` starts a comment."""
    out: dict[str, set[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in line.split("\t") if p.strip()]
        if len(parts) != 2:
            raise PermissionMapError(
                "expected 'api-qualified-name<TAB>PERMISSION'", lineno
            )
        api, perm = parts[0].strip(), parts[1].strip()
        out.setdefault(api, set()).add(perm)
    return out


def load_manifest(text: str) -> set[str]:
    """Declared permissions, one per line; `#` starts a comment."""
    out: set[str] = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.add(line)
    return out


@dataclass(frozen=True)
class PermissionFinding:
    kind: str  # unused-permission | missing-permission
    permission: str
    witness_api: Optional[str] = None
    witness_state: Optional[str] = None


def _api_call_events(result: AnalysisResult) -> list[tuple[str, str, tuple]]:
    """(api name, node key, site) for every API call event, sorted."""
    calls = []
    for graph in result.graphs:
        for key, kind, name, _message, site in graph.sorted_events():
            if kind == "api-call":
                calls.append((name, key, site))
    return sorted(calls)


def permission_report(
    result: AnalysisResult,
    declared: set[str],
    permission_map: dict[str, set[str]],
) -> list[PermissionFinding]:
    """Compare declared permissions against those required by reached APIs."""
    used: dict[str, tuple[str, str]] = {}
    for api, key, _site in _api_call_events(result):
        for perm in permission_map.get(api, ()):
            used.setdefault(perm, (api, key))
    findings = [
        PermissionFinding("unused-permission", perm)
        for perm in sorted(declared - used.keys())
    ]
    for perm in sorted(used.keys() - declared):
        api, key = used[perm]
        findings.append(
            PermissionFinding("missing-permission", perm, witness_api=api, witness_state=key)
        )
    return findings


@dataclass(frozen=True)
class ApiDumpEntry:
    api: str
    call_sites: int
    witnesses: tuple[str, ...]


def api_dump(result: AnalysisResult) -> list[ApiDumpEntry]:
    """Every reachable API call, with distinct call sites and witness states."""
    sites: dict[str, set[tuple]] = {}
    witnesses: dict[str, set[str]] = {}
    for api, key, site in _api_call_events(result):
        sites.setdefault(api, set()).add(site)
        witnesses.setdefault(api, set()).add(key)
    return [
        ApiDumpEntry(api, len(sites[api]), tuple(sorted(witnesses[api])))
        for api in sorted(sites)
    ]


@dataclass(frozen=True)
class HeatEntry:
    method: str
    index: int
    line: Optional[int]
    states: int
    revisits: int


def heat_map(result: AnalysisResult) -> list[HeatEntry]:
    """Per-statement intensity: distinct states whose head is the statement,
    plus raw worklist revisits for comparison."""
    states: dict[tuple, int] = {}
    revisits: dict[tuple, int] = {}
    for graph in result.graphs:
        for pos, n in graph.statement_counts().items():
            states[pos] = states.get(pos, 0) + n
        for pos, n in graph.revisit_counts.items():
            revisits[pos] = revisits.get(pos, 0) + n
    methods = _methods_by_name(result)
    entries = []
    for pos in sorted(states):
        method_name, index = pos
        entries.append(
            HeatEntry(
                method=method_name,
                index=index,
                line=_source_line(methods.get(method_name), index),
                states=states[pos],
                revisits=revisits.get(pos, 0),
            )
        )
    return entries


def _methods_by_name(result: AnalysisResult) -> dict[str, MethodDef]:
    return {
        md.qualified_name: md
        for cd in result.table.program.classes
        for md in cd.methods
    }


def _source_line(method: Optional[MethodDef], index: int) -> Optional[int]:
    """Source line from the nearest preceding line marker, falling back to
    the statement's own parse position."""
    if method is None or index >= len(method.body):
        return None
    marker = None
    for stmt in method.body[: index + 1]:
        if isinstance(stmt, Line):
            marker = stmt.number
    if marker is not None:
        return marker
    pos = method.body[index].pos
    return pos.line if pos.line > 0 else None


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass
class NodeView:
    node: NodeRecord
    graph: StateGraph
    facts: StateFacts
    verdict: StateVerdict


def compute_verdicts(
    result: AnalysisResult, predicates: Optional[PredicateProgram] = None
) -> dict[str, NodeView]:
    """Facts and verdicts for every node, evaluated against the final stores."""
    program = predicates if predicates is not None else result.options.predicates
    views: dict[str, NodeView] = {}
    machine = Machine(result.table, result.options.policy)
    for graph in result.graphs:
        for node in graph.sorted_nodes():
            store = graph.store_of(node)
            facts = state_facts(machine, node.state.with_store(store), store)
            verdict = evaluate(program, facts)
            views[node.key] = NodeView(node, graph, facts, verdict)
    return views


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _node_label(view: NodeView) -> str:
    state = view.node.state
    if state.is_final:
        head = "(final)"
    else:
        stmt = state.code.head()
        head = stmt_to_text(stmt) if stmt is not None else "(end)"
    ctx = ",".join("/".join(str(p) for p in site) for site in state.fp.context)
    fp_text = state.fp.method + (f" [{ctx}]" if ctx else "")
    label = f"{head}\nfp: {fp_text}"
    if view.node.truncated:
        label += "\n(truncated)"
    return label


def export_dot(result: AnalysisResult, views: dict[str, NodeView]) -> str:
    out = ["digraph states {"]
    out.append('  graph [rankdir=TB];')
    out.append('  node [shape=box, style=filled, fillcolor=white];')
    for key in sorted(views):
        view = views[key]
        attrs = [f'label="{_dot_escape(_node_label(view))}"']
        color = view.verdict.color
        if color:
            first, *rest = [part.strip() for part in color.split(",")]
            attrs.append(f'fillcolor="{_dot_escape(first)}"')
            attrs.extend(rest)  # extra attributes pass through verbatim
        if view.node.root:
            attrs.append("penwidth=2")
        if view.node.final:
            attrs.append("peripheries=2")
        if view.node.truncated:
            attrs.append('style="filled,dashed"')
        out.append(f'  "{key}" [{", ".join(attrs)}];')
    edges = sorted(
        (src, dst, tag) for graph in result.graphs for (src, dst, tag) in graph.edges
    )
    for src, dst, tag in edges:
        out.append(f'  "{src}" -> "{dst}" [label="{_dot_escape(tag)}"];')
    out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# JSON export
# ---------------------------------------------------------------------------

def _node_json(view: NodeView, methods: dict[str, MethodDef]) -> dict:
    node = view.node
    state = node.state
    graph = view.graph
    store = graph.store_of(node)
    slice_store = abstract_gc(state.with_store(store), store)
    code = state.code
    if isinstance(code, CodeRef):
        method, index, synthetic = code.method.qualified_name, code.index, False
    elif isinstance(code, SynthCode):
        method, index, synthetic = (
            code.rest.method.qualified_name,
            code.rest.index,
            True,
        )
    else:
        method, index, synthetic = None, None, False
    stmt = code.head()
    line = None
    if method is not None and index is not None and not synthetic:
        line = _source_line(methods.get(method), index)
    return {
        "id": node.key,
        "entry": graph.entry.qualified,
        "method": method,
        "index": index,
        "synthetic": synthetic,
        "head": stmt_to_text(stmt) if stmt is not None else None,
        "line": line,
        "fp": encode_fp(state.fp),
        "ka": encode_ka(state.ka),
        "root": node.root,
        "final": node.final,
        "truncated": node.truncated,
        "color": view.verdict.color,
        "matchedRule": view.verdict.matched_rule,
        "inMethod": view.facts.method_qual,
        "writtenTarget": view.facts.written_target,
        "resolvedTargets": list(view.facts.resolved),
        "apiCalls": list(view.facts.apis),
        "storeSlice": encode_store(slice_store),
    }


def export_json(
    result: AnalysisResult,
    views: dict[str, NodeView],
    permissions: Optional[tuple[set[str], list[PermissionFinding]]] = None,
    source: Optional[str] = None,
) -> str:
    opts = result.options
    methods = _methods_by_name(result)
    nodes = [_node_json(views[key], methods) for key in sorted(views)]
    edges = [
        {"from": src, "to": dst, "tag": tag}
        for graph in result.graphs
        for (src, dst, tag) in graph.edges
    ]
    edges.sort(key=lambda e: (e["from"], e["to"], e["tag"]))
    events = [
        {"state": key, "kind": kind, "name": name, "message": message, "site": list(site)}
        for graph in result.graphs
        for (key, kind, name, message, site) in graph.sorted_events()
    ]
    events.sort(key=lambda e: json.dumps(e, sort_keys=True))
    perm_block = None
    if permissions is not None:
        declared, findings = permissions
        perm_block = {
            "declared": sorted(declared),
            "findings": [
                {
                    "kind": f.kind,
                    "permission": f.permission,
                    "witnessApi": f.witness_api,
                    "witnessState": f.witness_state,
                }
                for f in findings
            ],
        }
    doc = {
        "schema": SCHEMA_VERSION,
        "source": source,
        "options": {
            "k": opts.k,
            "widen": opts.widen,
            "gc": opts.gc,
            "cutoff": opts.max_steps,
            "singlePass": opts.single_pass,
            "entries": [e.qualified for e in result.entries],
            "lifecycle": list(opts.lifecycle),
        },
        "passes": result.passes,
        "incomplete": result.incomplete,
        "entryPoints": [
            {"className": e.class_name, "methodName": e.method_name, "reason": e.reason}
            for e in result.entries
        ],
        "nodes": nodes,
        "edges": edges,
        "events": events,
        "apiDump": [
            {"api": e.api, "callSites": e.call_sites, "witnesses": list(e.witnesses)}
            for e in api_dump(result)
        ],
        "heatMap": [
            {
                "method": h.method,
                "index": h.index,
                "line": h.line,
                "states": h.states,
                "revisits": h.revisits,
            }
            for h in heat_map(result)
        ],
        "permissions": perm_block,
        "truncationFrontier": sorted(
            key for key, view in views.items() if view.node.truncated
        ),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Text reports
# ---------------------------------------------------------------------------

def render_api_dump(entries: list[ApiDumpEntry]) -> str:
    if not entries:
        return "no reachable API calls\n"
    lines = ["api\tcall-sites\twitness-states"]
    for e in entries:
        lines.append(f"{e.api}\t{e.call_sites}\t{','.join(e.witnesses)}")
    return "\n".join(lines) + "\n"


def render_heat_map(entries: list[HeatEntry]) -> str:
    if not entries:
        return "no reachable statements\n"
    lines = ["method\tindex\tline\tstates\trevisits"]
    for e in entries:
        line = "-" if e.line is None else str(e.line)
        lines.append(f"{e.method}\t{e.index}\t{line}\t{e.states}\t{e.revisits}")
    return "\n".join(lines) + "\n"


def render_permission_report(
    declared: set[str], findings: list[PermissionFinding]
) -> str:
    lines = [f"declared: {', '.join(sorted(declared)) if declared else '(none)'}"]
    if not findings:
        lines.append("no findings")
    for f in findings:
        if f.kind == "unused-permission":
            lines.append(f"unused-permission\t{f.permission}")
        else:
            lines.append(
                f"missing-permission\t{f.permission}\twitness: {f.witness_api} at {f.witness_state}"
            )
    return "\n".join(lines) + "\n"
