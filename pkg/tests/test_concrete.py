import pytest

from conftest import CORPUS_ENTRIES, corpus_table

from oobc.concrete import (
    CFP0,
    CObj,
    ConcreteMachine,
    abstract_atom,
    abstracts,
    concrete_gc,
    run_concrete,
)
from oobc.domain import (
    ENTRY_FP,
    INT_TOP,
    IntConst,
    RegAddr,
    Store,
    Value,
)
from oobc.frontend import ClassTable, RET_REG, parse_program
from oobc.machine import AllocationPolicy, Machine


def _table(src: str) -> ClassTable:
    return ClassTable(parse_program(src))


def _entry(table: ClassTable, qualified: str):
    cls, name = qualified.rsplit("/", 1)
    return table.resolve_method(cls, name)[0]


def _final_ret(trace):
    final = trace.states[-1]
    return final.store[RegAddr(final.fp, RET_REG)]


def test_assign_then_return_traces_three_states():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public static main () int (throws) (limit 2)"
        "   (assign x 5) (return x))))"
    )
    table = _table(src)
    trace = run_concrete(table, _entry(table, "A/main"))
    assert trace.terminal == "halt"
    assert len(trace.states) == 3
    assert _final_ret(trace) == 5


def test_reflection_snippet_enters_stub_body():
    # hand-stepping the three reflective lines: the last transition lands
    # inside the resolved method's body
    table = corpus_table("reflect_env_twin")
    trace = run_concrete(table, _entry(table, "Main/main"))
    assert trace.terminal == "halt"
    visited = {
        s.code.enclosing_method().qualified_name
        for s in trace.states
        if s.code.enclosing_method() is not None
    }
    assert "android/os/Environment/getExternalStorageDirectory" in visited
    assert trace.api_call_names() == [
        "android/os/Environment/getExternalStorageDirectory"
    ]


def test_fuel_exhaustion_is_flagged():
    table = corpus_table("loop_count")
    trace = run_concrete(table, _entry(table, "Main/main"), fuel=1)
    assert trace.terminal == "fuel"
    assert len(trace.states) == 2  # initial state plus one step


def test_identical_runs_produce_identical_traces():
    table = corpus_table("invoke_kinds")
    t1 = run_concrete(table, _entry(table, "Main/main"))
    t2 = run_concrete(table, _entry(table, "Main/main"))
    assert len(t1.states) == len(t2.states)
    for a, b in zip(t1.states, t2.states):
        assert a.code == b.code and a.fp == b.fp and a.store == b.store


EXPECTED_RETURNS = {
    "straight_line": 49,
    "branching": 1,
    "loop_count": 3,
    "fields": 11,
    "inherit_virtual": 3,  # B/m gives 2 via the merged receiver, C/m gives 1
    "invoke_kinds": 19,
    "recursion": 3,
    "interface_shapes": 3,
    "getmethod_override": 2,
    "instanceof_merge": True,
}


@pytest.mark.parametrize("name,expected", sorted(EXPECTED_RETURNS.items()))
def test_corpus_concrete_results(name, expected):
    table = corpus_table(name)
    trace = run_concrete(table, _entry(table, CORPUS_ENTRIES[name][0]))
    assert trace.terminal == "halt", (name, trace.error)
    assert _final_ret(trace) == expected


def test_reflect_top_halts_with_reflection_error():
    table = corpus_table("reflect_top")
    trace = run_concrete(table, _entry(table, "Main/main"))
    assert trace.terminal == "error"
    assert "not found" in trace.error


def test_multi_entry_sequencing_carries_the_store():
    table = corpus_table("multi_entry")
    machine = ConcreteMachine(table)
    t1 = machine.run(_entry(table, "App/onCreate"), fuel=100)
    assert t1.terminal == "halt"
    t2 = machine.run(_entry(table, "App/onClick"), fuel=100, initial_store=t1.final_store)
    assert t2.terminal == "halt"
    final = t2.states[-1]
    assert final.store[RegAddr(final.fp, "out")] == 42
    # the opposite order fails at the unbound read, which is fine
    machine2 = ConcreteMachine(table)
    t3 = machine2.run(_entry(table, "App/onClick"), fuel=100)
    assert t3.terminal == "error"


def test_abstracts_identity_scale():
    # every state of a straight-line trace is covered by the abstract run;
    # the trace and the analysis must share one parsed program so code
    # references line up
    from conftest import corpus_entries
    from oobc.engine import AnalysisOptions, analyze_all_entries

    table = corpus_table("straight_line")
    trace = run_concrete(table, _entry(table, "Main/main"))
    result = analyze_all_entries(
        table, corpus_entries(table, "straight_line"), AnalysisOptions(widen=False)
    )
    graph = result.graphs[0]
    for cs in trace.states:
        assert any(
            abstracts(n.state, cs, 0, abs_store=graph.store_of(n))
            for n in graph.nodes.values()
        )


def test_abstract_int_top_covers_concrete_int():
    assert Value([abstract_atom(7, 0)]).leq(Value([INT_TOP]))


def test_missing_abstract_binding_fails_abstracts():
    table = corpus_table("straight_line")
    entry = _entry(table, "Main/main")
    trace = run_concrete(table, entry)
    machine = Machine(table, AllocationPolicy(0))
    bare = machine.inject(entry)  # no seeded registers at all
    # the final concrete state binds ret; an empty abstract store cannot cover it
    assert not abstracts(
        bare.with_store(Store.empty()), trace.states[-1], 0, abs_store=Store.empty()
    )


def test_concrete_gc_keeps_reachable_fields():
    table = corpus_table("fields")
    trace = run_concrete(table, _entry(table, "Main/main"))
    state = trace.states[-1]
    gcd = concrete_gc(state)
    # registers of the live frame survive
    assert RegAddr(state.fp, RET_REG) in gcd.store
    # collected twice is collected once
    again = concrete_gc(gcd)
    assert again.store == gcd.store
