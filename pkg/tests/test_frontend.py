import pytest

from conftest import CORPUS_ENTRIES, corpus_source

from oobc.frontend import (
    Assign,
    ClassTable,
    CodeRef,
    ConstString,
    FrontendError,
    Goto,
    Invoke,
    Label,
    Name,
    Nop,
    ResolutionError,
    Return,
    build_label_map,
    parse_program,
    print_program,
)

MINIMAL = (
    "(stub class java/lang/Object extends java/lang/Object () ())"
    "(class A extends java/lang/Object ()"
    " ((method public m () void (throws) (limit 1) (return void))))"
)


def test_minimal_program():
    program = parse_program(MINIMAL)
    assert len(program.classes) == 2
    cd = program.class_named("A")
    assert len(cd.methods) == 1
    assert len(cd.methods[0].body) == 1
    assert isinstance(cd.methods[0].body[0], Return)


def test_unknown_superclass_names_offender():
    with pytest.raises(FrontendError) as exc:
        parse_program("(class A extends B () ())")
    assert "B" in str(exc.value)


def test_duplicate_class_rejected():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object () ())"
        "(class A extends java/lang/Object () ())"
    )
    with pytest.raises(FrontendError) as exc:
        parse_program(src)
    assert "duplicate class 'A'" in str(exc.value)


def test_duplicate_method_rejected_no_overloading():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public m () void (throws) (limit 1) (return void))"
        "  (method public m (int) void (throws) (limit 2) (return void))))"
    )
    with pytest.raises(FrontendError) as exc:
        parse_program(src)
    assert "overloading" in str(exc.value)


def test_dangling_label_rejected():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public m () void (throws) (limit 1) (goto NOWHERE) (return void))))"
    )
    with pytest.raises(FrontendError) as exc:
        parse_program(src)
    assert "NOWHERE" in str(exc.value)


def test_ret_register_cannot_be_assigned():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public m () void (throws) (limit 1) (assign ret 1) (return void))))"
    )
    with pytest.raises(FrontendError) as exc:
        parse_program(src)
    assert "ret" in str(exc.value)


def test_inheritance_cycle_rejected():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends B () ())"
        "(class B extends A () ())"
    )
    with pytest.raises(FrontendError) as exc:
        parse_program(src)
    assert "cycle" in str(exc.value)


def test_assign_from_invoke_desugars():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public static f () int (throws) (limit 1) (return 1))"
        "  (method public static m () int (throws) (limit 2)"
        "   (assign x (invoke-static A/f () ()))"
        "   (return x))))"
    )
    program = parse_program(src)
    body = program.class_named("A").methods[1].body
    assert isinstance(body[0], Invoke)
    assert body[1] == Assign("x", Name("ret"))


def test_invoke_interface_typo_accepted():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public k () int (throws) (limit 1) (return 1))"
        "  (method public m () void (throws) (limit 2)"
        "   (invoke-interafce A/k (this) ())"
        "   (return void))))"
    )
    program = parse_program(src)
    stmt = program.class_named("A").methods[1].body[0]
    assert isinstance(stmt, Invoke)
    assert stmt.kind == "interface"


def test_reflection_snippet_round_trips():
    # hand-translated lookup/resolve/invoke sequence; the oracle for the
    # round trip is a re-parse of the printed output
    src = corpus_source("reflect_env_twin")
    program = parse_program(src)
    reparsed = parse_program(print_program(program))
    assert reparsed == program
    body = program.class_named("Main").methods[0].body
    assert isinstance(body[0], ConstString)
    kinds = [s.kind for s in body if isinstance(s, Invoke)]
    assert kinds == ["static", "virtual", "virtual"]


@pytest.mark.parametrize("name", sorted(CORPUS_ENTRIES))
def test_round_trip_whole_corpus(name):
    program = parse_program(corpus_source(name))
    assert parse_program(print_program(program)) == program


def _method_with_body(stmts: str):
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        f" ((method public m () void (throws) (limit 1) {stmts})))"
    )
    return parse_program(src).class_named("A").methods[0]


def _brute_force_label_map(method):
    # independent oracle: scan every suffix for a leading label statement
    out = {}
    for i in range(len(method.body)):
        head = method.body[i]
        if isinstance(head, Label):
            out[head.name] = i
    return out


def test_label_map_label_first():
    m = _method_with_body("(label L) (nop) (return void)")
    lm = build_label_map(m)
    assert lm["L"] == CodeRef(m, 0)
    assert lm["L"].head() == Label("L")


def test_label_map_label_mid_body():
    m = _method_with_body("(nop) (label L) (return void)")
    lm = build_label_map(m)
    assert lm["L"].index == 1


def test_label_map_two_labels_match_brute_force():
    m = _method_with_body("(label A) (nop) (label B) (return void) (goto A)")
    lm = build_label_map(m)
    oracle = _brute_force_label_map(m)
    assert {lbl: ref.index for lbl, ref in lm.items()} == oracle
    for lbl, ref in lm.items():
        assert isinstance(ref.head(), Label) and ref.head().name == lbl
        # images are suffixes of the same body, by position
        assert ref.method is m


CHAIN = (
    "(stub class java/lang/Object extends java/lang/Object () ())"
    "(class A extends java/lang/Object ()"
    " ((method public m () int (throws) (limit 1) (return 1))"
    "  (method public only-a () int (throws) (limit 1) (return 0))))"
    "(class B extends A ()"
    " ((method public m () int (throws) (limit 1) (return 2))))"
    "(class C extends B () ())"
    "(class D extends C () ())"
)


def test_resolve_inherited_method():
    table = ClassTable(parse_program(CHAIN))
    m, defining = table.resolve_method("B", "only-a")
    assert defining.name == "A"
    assert m.qualified_name == "A/only-a"


def test_resolve_override_wins():
    table = ClassTable(parse_program(CHAIN))
    m, defining = table.resolve_method("B", "m")
    assert defining.name == "B"


def test_resolve_walks_deep_chain_and_reports_it():
    table = ClassTable(parse_program(CHAIN))
    # the expected chain, enumerated by hand
    assert [c.name for c in table.superclass_chain("D")] == [
        "D", "C", "B", "A", "java/lang/Object",
    ]
    m, defining = table.resolve_method("D", "only-a")
    assert defining.name == "A"
    with pytest.raises(ResolutionError) as exc:
        table.resolve_method("D", "missing")
    assert exc.value.chain == ["D", "C", "B", "A", "java/lang/Object"]


def test_resolution_independent_of_declaration_order():
    reordered = (
        "(class D extends C () ())"
        "(class C extends B () ())"
        "(class B extends A ()"
        " ((method public m () int (throws) (limit 1) (return 2))))"
        "(class A extends java/lang/Object ()"
        " ((method public m () int (throws) (limit 1) (return 1))"
        "  (method public only-a () int (throws) (limit 1) (return 0))))"
        "(stub class java/lang/Object extends java/lang/Object () ())"
    )
    t1 = ClassTable(parse_program(CHAIN))
    t2 = ClassTable(parse_program(reordered))
    assert t1.resolve_method("D", "m")[1].name == t2.resolve_method("D", "m")[1].name


def test_declared_fields_walk_hierarchy():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ((field public a int)) ())"
        "(class B extends A ((field public b boolean)) ())"
    )
    table = ClassTable(parse_program(src))
    assert sorted(fd.name for fd in table.declared_fields("B")) == ["a", "b"]
