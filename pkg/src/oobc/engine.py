"""Reachable-state exploration: worklist closure of the step relation, with
optional global store widening, abstract garbage collection, per-run cutoffs,
and the multi-entry-point sweep that threads one monotone store through every
entry until it stabilizes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .domain import (
    AbstractState,
    FieldAddr,
    RegAddr,
    FunKont,
    ObjVal,
    Store,
    state_id,
    state_sort_key,
)
from .frontend import ClassTable, CodeRef, Invoke, MethodDef, Program, ResolutionError
from .machine import AllocationPolicy, Machine
from .predicates import EMPTY_PROGRAM, PredicateProgram, StateFacts, evaluate

DEFAULT_LIFECYCLE = (
    "onCreate",
    "onStart",
    "onResume",
    "onPause",
    "onStop",
    "onDestroy",
    "onClick",
    "onReceive",
)


class ConfigError(Exception):
    """Bad analysis configuration (unknown entry point, empty body, ...)."""


@dataclass(frozen=True)
class EntryPoint:
    class_name: str
    method_name: str
    reason: str  # annotated | override-of-lifecycle | explicit-flag

    @property
    def qualified(self) -> str:
        return f"{self.class_name}/{self.method_name}"


@dataclass
class AnalysisOptions:
    k: int = 0
    widen: bool = True
    gc: bool = False
    max_steps: Optional[int] = None
    single_pass: bool = False
    workers: int = 1
    predicates: PredicateProgram = EMPTY_PROGRAM
    lifecycle: tuple[str, ...] = DEFAULT_LIFECYCLE

    @property
    def policy(self) -> AllocationPolicy:
        return AllocationPolicy(self.k)


@dataclass
class NodeRecord:
    state: AbstractState  # store is None under widening
    key: str
    sort_key: str
    root: bool = False
    final: bool = False
    truncated: bool = False


@dataclass
class StateGraph:
    entry: EntryPoint
    widened: bool
    nodes: dict[str, NodeRecord] = field(default_factory=dict)
    edges: set[tuple[str, str, str]] = field(default_factory=set)
    events: set[tuple[str, str, str, str, tuple]] = field(default_factory=set)
    revisit_counts: dict[tuple, int] = field(default_factory=dict)
    root_key: str = ""
    incomplete: bool = False
    shared_store: Optional[Store] = None

    def store_of(self, node: NodeRecord) -> Store:
        return self.shared_store if self.widened else node.state.store

    def sorted_nodes(self) -> list[NodeRecord]:
        return sorted(self.nodes.values(), key=lambda n: n.sort_key)

    def sorted_events(self) -> list[tuple[str, str, str, str, tuple]]:
        return sorted(self.events)

    def statement_counts(self) -> dict[tuple, int]:
        """Distinct states per real statement position."""
        counts: dict[tuple, int] = {}
        for node in self.nodes.values():
            pos = _position_of(node.state)
            if pos is not None:
                counts[pos] = counts.get(pos, 0) + 1
        return counts


def _position_of(state: AbstractState) -> Optional[tuple]:
    code = state.code
    if isinstance(code, CodeRef) and code.head() is not None:
        return (code.method.qualified_name, code.index)
    return None


@dataclass
class AnalysisResult:
    table: ClassTable
    entries: list[EntryPoint]
    graphs: list[StateGraph]
    final_store: Store
    options: AnalysisOptions
    passes: int

    @property
    def incomplete(self) -> bool:
        return any(g.incomplete for g in self.graphs)


# ---------------------------------------------------------------------------
# Entry point discovery
# ---------------------------------------------------------------------------

def find_entry_points(
    table: ClassTable,
    lifecycle: tuple[str, ...] = DEFAULT_LIFECYCLE,
    explicit: tuple[str, ...] = (),
) -> list[EntryPoint]:
    """Public lifecycle overrides on application (non-stub) classes, plus any
    explicitly requested class/method pairs, in declaration order."""
    program = table.program
    order: dict[tuple[str, str], tuple[int, int]] = {}
    found: dict[tuple[str, str], EntryPoint] = {}

    for ci, cd in enumerate(program.classes):
        if cd.is_stub:
            continue
        for mi, md in enumerate(cd.methods):
            if "public" in md.attributes and md.name in lifecycle and md.body:
                key = (cd.name, md.name)
                order[key] = (ci, mi)
                found[key] = EntryPoint(cd.name, md.name, "override-of-lifecycle")

    class_index = {cd.name: i for i, cd in enumerate(program.classes)}
    for spec_name in explicit:
        if "/" not in spec_name:
            raise ConfigError(f"entry '{spec_name}' must be CLASS/METHOD")
        cls, mname = spec_name.rsplit("/", 1)
        try:
            md, defining = table.resolve_method(cls, mname)
        except ResolutionError as exc:
            raise ConfigError(f"entry point not found: {exc}")
        if not md.body:
            raise ConfigError(f"entry '{spec_name}' has an empty body")
        key = (cls, mname)
        if key not in found:
            mi = list(defining.methods).index(md)
            order[key] = (class_index[cls], mi)
            found[key] = EntryPoint(cls, mname, "explicit-flag")

    return [found[k] for k in sorted(found, key=lambda k: order[k])]


def entry_method(table: ClassTable, entry: EntryPoint) -> MethodDef:
    return table.resolve_method(entry.class_name, entry.method_name)[0]


# ---------------------------------------------------------------------------
# Abstract garbage collection
# ---------------------------------------------------------------------------

def abstract_gc(state: AbstractState, store: Store) -> Store:
    """Restrict the store to addresses reachable from the state's registers
    and continuation address."""
    reg_index: dict = {}
    field_index: dict = {}
    for addr in store.addresses():
        if isinstance(addr, RegAddr):
            reg_index.setdefault(addr.fp, []).append(addr)
        elif isinstance(addr, FieldAddr):
            field_index.setdefault(addr.op, []).append(addr)

    reached: set = set()
    work = list(reg_index.get(state.fp, []))
    if state.ka in store:
        work.append(state.ka)
    while work:
        addr = work.pop()
        if addr in reached:
            continue
        reached.add(addr)
        for atom in store.get(addr):
            if isinstance(atom, ObjVal):
                for fa in field_index.get(atom.op, []):
                    if fa not in reached:
                        work.append(fa)
            elif isinstance(atom, FunKont):
                for ra in reg_index.get(atom.fp, []):
                    if ra not in reached:
                        work.append(ra)
                if atom.ka in store and atom.ka not in reached:
                    work.append(atom.ka)
    return store.restrict(reached)


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

def state_facts(machine: Machine, state: AbstractState, store: Store) -> StateFacts:
    method = state.code.enclosing_method()
    written, resolved, apis = machine.peek_targets(state, store)
    return StateFacts(
        method_qual=method.qualified_name if method else None,
        is_invoke=isinstance(state.code.head(), Invoke),
        written_target=written,
        resolved=tuple(resolved),
        apis=tuple(apis),
    )


def explore(
    table: ClassTable,
    entry: EntryPoint,
    initial_store: Store,
    options: AnalysisOptions,
) -> tuple[StateGraph, Store]:
    """Worklist closure of the step relation from the entry's initial state.

    Widened mode keys states by (code, frame, kont address) against one
    shared, monotonically growing store; whenever the store grows, every
    known state is re-explored under it. Per-state-store mode keys states by
    their full configuration.
    """
    machine = Machine(table, options.policy)
    entry_def = entry_method(table, entry)
    injected = machine.inject(entry_def)
    store0 = machine.seed_entry_frame(entry_def, injected.store).join(initial_store)

    graph = StateGraph(entry=entry, widened=options.widen)
    budget = options.max_steps
    transitions_seen = 0

    def register(state: AbstractState) -> tuple[NodeRecord, bool]:
        sk = state_sort_key(state, options.widen)
        key = state_id(sk, scope=entry.qualified)
        node = graph.nodes.get(key)
        if node is not None:
            return node, False
        kept = state.with_store(None) if options.widen else state
        node = NodeRecord(kept, key, sk, final=state.is_final)
        graph.nodes[key] = node
        return node, True

    def record_events(key: str, events) -> None:
        for ev in events:
            graph.events.add((key, ev.kind, ev.name, ev.message, tuple(ev.site)))

    if options.widen:
        shared = store0
        root_node, _ = register(injected)
        root_node.root = True
        graph.root_key = root_node.key
        frontier = [root_node]
        while frontier:
            batch = sorted(frontier, key=lambda n: n.sort_key)
            frontier = []
            stepped: list[NodeRecord] = []
            for node in batch:
                if node.final or node.truncated:
                    continue
                facts = state_facts(machine, node.state.with_store(shared), shared)
                verdict = evaluate(options.predicates, facts)
                if verdict.truncated:
                    node.truncated = True
                    graph.incomplete = True
                    continue
                if budget is not None and transitions_seen >= budget:
                    graph.incomplete = True
                    stepped = []
                    frontier = []
                    break
                stepped.append(node)
            results = _step_batch(
                machine, [n.state.with_store(shared) for n in stepped], options.workers
            )
            new_nodes: list[NodeRecord] = []
            next_store = shared
            for node, result in zip(stepped, results):
                pos = _position_of(node.state)
                if pos is not None:
                    graph.revisit_counts[pos] = graph.revisit_counts.get(pos, 0) + 1
                record_events(node.key, result.events)
                transitions_seen += len(result.transitions)
                for tag, succ in result.transitions:
                    next_store = next_store.join(succ.store)
                    succ_node, fresh = register(succ)
                    graph.edges.add((node.key, succ_node.key, tag))
                    if fresh:
                        new_nodes.append(succ_node)
            if next_store != shared:
                shared = next_store
                # the grown store can enable new behaviors anywhere
                frontier = [
                    n for n in graph.nodes.values() if not (n.final or n.truncated)
                ]
            else:
                frontier = new_nodes
        graph.shared_store = shared
        return graph, shared

    # per-state stores
    start = injected.with_store(store0)
    if options.gc:
        start = start.with_store(abstract_gc(start, start.store))
    root_node, _ = register(start)
    root_node.root = True
    graph.root_key = root_node.key
    frontier = [root_node]
    store_union = start.store
    while frontier:
        batch = sorted(frontier, key=lambda n: n.sort_key)
        frontier = []
        stepped = []
        for node in batch:
            if node.final or node.truncated:
                continue
            facts = state_facts(machine, node.state, node.state.store)
            verdict = evaluate(options.predicates, facts)
            if verdict.truncated:
                node.truncated = True
                graph.incomplete = True
                continue
            if budget is not None and transitions_seen >= budget:
                graph.incomplete = True
                stepped = []
                frontier = []
                break
            stepped.append(node)
        results = _step_batch(machine, [n.state for n in stepped], options.workers)
        new_nodes = []
        for node, result in zip(stepped, results):
            pos = _position_of(node.state)
            if pos is not None:
                graph.revisit_counts[pos] = graph.revisit_counts.get(pos, 0) + 1
            record_events(node.key, result.events)
            transitions_seen += len(result.transitions)
            for tag, succ in result.transitions:
                if options.gc:
                    succ = succ.with_store(abstract_gc(succ, succ.store))
                store_union = store_union.join(succ.store)
                succ_node, fresh = register(succ)
                graph.edges.add((node.key, succ_node.key, tag))
                if fresh:
                    new_nodes.append(succ_node)
        frontier.extend(new_nodes)
    return graph, store_union


def _step_batch(machine: Machine, states: list[AbstractState], workers: int):
    if workers > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(machine.step, states))
    return [machine.step(s) for s in states]


# ---------------------------------------------------------------------------
# Multi-entry-point fixed point
# ---------------------------------------------------------------------------

def analyze_all_entries(
    table: ClassTable,
    entries: list[EntryPoint],
    options: AnalysisOptions,
) -> AnalysisResult:
    """Sweep every entry point, threading the store from one exploration into
    the next; the sweep repeats until the store stops growing (single-pass
    mode stops after the first sweep). The carried store only ever grows, so
    the iteration terminates."""
    store = Store.empty()
    graphs: dict[str, StateGraph] = {}
    passes = 0
    while True:
        passes += 1
        before = store
        for entry in entries:
            graph, out_store = explore(table, entry, store, options)
            store = store.join(out_store)
            graphs[entry.qualified] = graph
        if options.single_pass or store == before:
            break
    return AnalysisResult(
        table=table,
        entries=entries,
        graphs=[graphs[e.qualified] for e in entries],
        final_store=store,
        options=options,
        passes=passes,
    )


def analyze_program(
    program: Program,
    options: AnalysisOptions,
    explicit_entries: tuple[str, ...] = (),
    lifecycle: Optional[tuple[str, ...]] = None,
) -> AnalysisResult:
    table = ClassTable(program)
    entries = find_entry_points(
        table, lifecycle or options.lifecycle, explicit_entries
    )
    return analyze_all_entries(table, entries, options)
