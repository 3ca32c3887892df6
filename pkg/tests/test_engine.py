import pytest

from conftest import CORPUS_ENTRIES, corpus_entries, corpus_table

from oobc.concrete import ConcreteMachine, abstract_addr, abstract_atom
from oobc.domain import (
    ENTRY_FP,
    FieldAddr,
    IntConst,
    ObjVal,
    ObjectPointer,
    RegAddr,
    Store,
    Value,
)
from oobc.engine import (
    AnalysisOptions,
    ConfigError,
    EntryPoint,
    abstract_gc,
    analyze_all_entries,
    explore,
    find_entry_points,
)
from oobc.frontend import ClassTable, parse_program
from oobc.machine import AllocationPolicy, Machine
from oobc.predicates import parse_predicates


def _table(src: str) -> ClassTable:
    return ClassTable(parse_program(src))


STRAIGHT_FIVE = (
    "(stub class java/lang/Object extends java/lang/Object () ())"
    "(class A extends java/lang/Object ()"
    " ((method public static m () int (throws) (limit 3)"
    "   (assign a 1) (assign b 2) (nop) (assign c (add a b)) (return c))))"
)


def test_straight_line_five_statements_six_nodes_five_edges():
    table = _table(STRAIGHT_FIVE)
    graph, _ = explore(
        table, EntryPoint("A", "m", "explicit-flag"), Store.empty(), AnalysisOptions()
    )
    assert len(graph.nodes) == 6
    assert len(graph.edges) == 5
    assert not graph.incomplete


def test_loop_terminates_under_widening_with_growing_store():
    table = corpus_table("loop_count")
    graph, store = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(k=0, widen=True),
    )
    assert not graph.incomplete
    assert len(graph.nodes) > 0
    # the returned store is above every node's reachable slice
    for node in graph.nodes.values():
        assert graph.store_of(node).leq(store)


def test_cutoff_one_yields_one_edge_and_incompleteness():
    table = corpus_table("loop_count")
    graph, _ = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(max_steps=1),
    )
    assert len(graph.edges) == 1
    assert graph.incomplete


def test_exploration_is_reproducible():
    table = corpus_table("invoke_kinds")
    keysets = []
    for _ in range(3):
        graph, _ = explore(
            table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
            AnalysisOptions(),
        )
        keysets.append((tuple(sorted(graph.nodes)), tuple(sorted(graph.edges))))
    assert keysets[0] == keysets[1] == keysets[2]


def test_workers_do_not_change_the_result():
    table = corpus_table("invoke_kinds")
    results = []
    for workers in (1, 3):
        graph, store = explore(
            table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
            AnalysisOptions(workers=workers),
        )
        results.append((sorted(graph.nodes), sorted(graph.edges), store))
    assert results[0] == results[1]


# -- entry points ---------------------------------------------------------------

def test_lifecycle_discovery_finds_both_entries():
    table = corpus_table("multi_entry")
    entries = find_entry_points(table)
    assert [e.qualified for e in entries] == ["App/onCreate", "App/onClick"]
    assert all(e.reason == "override-of-lifecycle" for e in entries)


def test_explicit_entry_flag():
    table = corpus_table("straight_line")
    entries = find_entry_points(table, explicit=("Main/main",))
    assert [e.qualified for e in entries] == ["Main/main"]
    assert entries[0].reason == "explicit-flag"


def test_unknown_explicit_entry_is_config_error():
    table = corpus_table("straight_line")
    with pytest.raises(ConfigError):
        find_entry_points(table, explicit=("Main/nope",))


def test_no_entry_points_gives_empty_analysis():
    table = corpus_table("straight_line")  # main is not a lifecycle name
    entries = find_entry_points(table)
    assert entries == []
    result = analyze_all_entries(table, entries, AnalysisOptions())
    assert result.graphs == [] and len(result.final_store) == 0


def test_stub_lifecycle_methods_are_not_entries():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(stub class android/app/Activity extends java/lang/Object ()"
        " ((method public onCreate () void (throws) (limit 1) (return void))))"
        "(class App extends android/app/Activity ()"
        " ((method public onCreate () void (throws) (limit 1) (return void))))"
    )
    table = _table(src)
    entries = find_entry_points(table)
    assert [e.qualified for e in entries] == ["App/onCreate"]


# -- multi-entry fixed point -----------------------------------------------------

def test_two_independent_entries_join_and_stabilize_in_one_extra_pass():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class App extends java/lang/Object ()"
        " ((method public onCreate () void (throws) (limit 2)"
        "   (assign a 1) (return void))"
        "  (method public onClick () void (throws) (limit 2)"
        "   (assign b 2) (return void))))"
    )
    table = _table(src)
    entries = find_entry_points(table)
    result = analyze_all_entries(table, entries, AnalysisOptions())
    store = result.final_store
    assert store.get(RegAddr(ENTRY_FP, "a")) == Value([IntConst(1)])
    assert store.get(RegAddr(ENTRY_FP, "b")) == Value([IntConst(2)])
    assert result.passes == 2  # second pass adds nothing and stops

    separate = [
        explore(table, e, Store.empty(), AnalysisOptions())[1] for e in entries
    ]
    assert store == separate[0].join(separate[1])


def test_writer_reader_entries_converge_for_both_orders():
    table = corpus_table("multi_entry")
    entries = find_entry_points(table)
    fwd = analyze_all_entries(table, entries, AnalysisOptions())
    rev = analyze_all_entries(table, list(reversed(entries)), AnalysisOptions())
    assert fwd.final_store == rev.final_store
    # the reader's destination register sees the writer's value in both
    out = fwd.final_store.get(RegAddr(ENTRY_FP, "out"))
    assert Value([IntConst(42)]).leq(out)

    # oracle: both concrete orders are covered by the final widened store
    for order in (entries, list(reversed(entries))):
        machine = ConcreteMachine(table)
        store = None
        for e in order:
            entry_def = table.resolve_method(e.class_name, e.method_name)[0]
            trace = machine.run(entry_def, fuel=200, initial_store=store)
            store = trace.final_store
            for cs in trace.states:
                for caddr, cval in cs.store.items():
                    aaddr = abstract_addr(caddr, 0)
                    assert Value([abstract_atom(cval, 0)]).leq(
                        fwd.final_store.get(aaddr)
                    ), (e.qualified, caddr)


def test_single_entry_matches_explore():
    table = corpus_table("straight_line")
    entries = find_entry_points(table, explicit=("Main/main",))
    result = analyze_all_entries(table, entries, AnalysisOptions())
    graph, store = explore(table, entries[0], Store.empty(), AnalysisOptions())
    assert sorted(result.graphs[0].nodes) == sorted(graph.nodes)
    assert result.final_store == store


def test_single_pass_mode_stops_after_one_sweep():
    table = corpus_table("multi_entry")
    entries = find_entry_points(table)
    result = analyze_all_entries(table, entries, AnalysisOptions(single_pass=True))
    assert result.passes == 1


# -- abstract GC ------------------------------------------------------------------

def test_gc_drops_unreachable_field():
    table = corpus_table("straight_line")
    machine = Machine(table, AllocationPolicy(0))
    entry = table.resolve_method("Main", "main")[0]
    st = machine.inject(entry)
    live_op = ObjectPointer(("Main/main", 0), ())
    dead_op = ObjectPointer(("Main/main", 1), ())
    store = (
        st.store.joined(RegAddr(ENTRY_FP, "o"), Value([ObjVal(live_op, "Main")]))
        .joined(FieldAddr(live_op, "f"), Value([IntConst(1)]))
        .joined(FieldAddr(dead_op, "f"), Value([IntConst(2)]))
    )
    gcd = abstract_gc(st.with_store(store), store)
    assert FieldAddr(live_op, "f") in gcd
    assert FieldAddr(dead_op, "f") not in gcd
    assert RegAddr(ENTRY_FP, "o") in gcd


def test_gc_idempotent():
    table = corpus_table("fields")
    graph, store = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(widen=False, gc=False),
    )
    some_node = graph.sorted_nodes()[-1]
    once = abstract_gc(some_node.state, some_node.state.store)
    twice = abstract_gc(some_node.state.with_store(once), once)
    assert once == twice


def test_gc_only_shrinks_states():
    table = corpus_table("fields")
    plain, _ = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(widen=False, gc=False),
    )
    gcd, _ = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(widen=False, gc=True),
    )
    assert len(gcd.nodes) <= len(plain.nodes)


# -- truncation --------------------------------------------------------------------

def test_truncation_suppresses_successors_and_flags_incompleteness():
    table = corpus_table("http_direct")
    pred = parse_predicates(
        '(truncate (uses-api "org/apache/http/client/HttpClient/execute") "12")'
    )
    base, _ = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(),
    )
    cut, _ = explore(
        table, EntryPoint("Main", "main", "explicit-flag"), Store.empty(),
        AnalysisOptions(predicates=pred),
    )
    assert cut.incomplete and not base.incomplete
    assert len(cut.nodes) < len(base.nodes)
    truncated = [n for n in cut.nodes.values() if n.truncated]
    assert len(truncated) == 1
    key = truncated[0].key
    assert not any(src == key for (src, _, _) in cut.edges)


# -- store growth ---------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(CORPUS_ENTRIES))
def test_store_monotone_along_transitions(name):
    # without GC, every transition only joins into the store
    table = corpus_table(name)
    for entry in corpus_entries(table, name):
        graph, _ = explore(
            table, entry, Store.empty(), AnalysisOptions(widen=False, gc=False)
        )
        for src, dst, _tag in graph.edges:
            pre = graph.nodes[src].state.store
            post = graph.nodes[dst].state.store
            assert pre.leq(post), (name, src, dst)


def test_final_store_grows_across_passes():
    table = corpus_table("multi_entry")
    entries = find_entry_points(table)
    one_pass = analyze_all_entries(table, entries, AnalysisOptions(single_pass=True))
    full = analyze_all_entries(table, entries, AnalysisOptions())
    assert one_pass.final_store.leq(full.final_store)
    assert full.passes >= 2


# -- widening precision/speed trade --------------------------------------------------

@pytest.mark.parametrize("name", sorted(CORPUS_ENTRIES))
def test_widened_no_larger_than_unwidened(name):
    table = corpus_table(name)
    entries = corpus_entries(table, name)
    widened = analyze_all_entries(table, entries, AnalysisOptions(widen=True))
    plain = analyze_all_entries(table, entries, AnalysisOptions(widen=False))
    n_w = sum(len(g.nodes) for g in widened.graphs)
    n_p = sum(len(g.nodes) for g in plain.graphs)
    assert n_w <= n_p, (name, n_w, n_p)
