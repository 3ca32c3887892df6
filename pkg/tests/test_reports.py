import json

import pytest

from conftest import analyze_corpus, corpus_entries, corpus_table, fixture_text

from oobc.domain import encode_store
from oobc.engine import AnalysisOptions, abstract_gc, analyze_all_entries, explore, EntryPoint, Store
from oobc.predicates import parse_predicates
from oobc.reports import (
    PermissionMapError,
    api_dump,
    compute_verdicts,
    export_dot,
    export_json,
    heat_map,
    load_manifest,
    load_permission_map,
    permission_report,
)

HTTP_EXECUTE = "org/apache/http/client/HttpClient/execute"
INTERNET = "android.permission.INTERNET"
CONTACTS = "android.permission.READ_CONTACTS"


def test_load_permission_map_and_errors():
    pm = load_permission_map(fixture_text("permission_map.tsv"))
    assert pm[HTTP_EXECUTE] == {INTERNET}
    with pytest.raises(PermissionMapError) as exc:
        load_permission_map("no-tab-here\n")
    assert exc.value.line == 1


def test_manifest_parsing():
    assert load_manifest(fixture_text("manifest_two.txt")) == {INTERNET, CONTACTS}
    assert load_manifest(fixture_text("manifest_empty.txt")) == set()


def _http_result():
    return analyze_corpus("http_direct")


def test_permission_unused_finding():
    result = _http_result()
    pm = load_permission_map(fixture_text("permission_map.tsv"))
    findings = permission_report(result, {INTERNET, CONTACTS}, pm)
    assert [(f.kind, f.permission) for f in findings] == [
        ("unused-permission", CONTACTS)
    ]


def test_permission_missing_finding_has_witness():
    result = _http_result()
    pm = load_permission_map(fixture_text("permission_map.tsv"))
    findings = permission_report(result, set(), pm)
    assert len(findings) == 1
    f = findings[0]
    assert f.kind == "missing-permission" and f.permission == INTERNET
    assert f.witness_api == HTTP_EXECUTE
    views = compute_verdicts(result)
    assert f.witness_state in views  # the witness resolves to an exported node


def test_permission_exact_match_no_findings():
    result = _http_result()
    pm = load_permission_map(fixture_text("permission_map.tsv"))
    assert permission_report(result, {INTERNET}, pm) == []


def test_api_dump_lists_reachable_apis():
    result = _http_result()
    dump = api_dump(result)
    names = [e.api for e in dump]
    assert HTTP_EXECUTE in names
    assert "org/apache/http/client/HttpClient/<init>" in names
    for entry in dump:
        assert entry.call_sites >= 1 and entry.witnesses


def test_api_dump_twin_equality():
    from conftest import TWIN_PAIRS

    for direct, twin in TWIN_PAIRS:
        d = [(e.api, e.call_sites) for e in api_dump(analyze_corpus(direct))]
        t = [(e.api, e.call_sites) for e in api_dump(analyze_corpus(twin))]
        assert d == t, (direct, twin)


def test_api_dump_empty_graph():
    table = corpus_table("straight_line")
    result = analyze_all_entries(table, [], AnalysisOptions())
    assert api_dump(result) == []


def test_heat_map_straight_line_all_ones():
    result = analyze_corpus("straight_line")
    entries = heat_map(result)
    main_rows = [e for e in entries if e.method == "Main/main"]
    assert main_rows and all(e.states == 1 for e in main_rows)
    # line markers key the rows to source lines
    assert any(e.line == 1 for e in main_rows)
    assert any(e.line == 2 for e in main_rows)


def test_heat_map_counts_double_under_k1_two_call_sites():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public static f () int (throws) (limit 1) (return 1))"
        "  (method public static m () void (throws) (limit 2)"
        "   (invoke-static A/f () ())"
        "   (invoke-static A/f () ())"
        "   (return void))))"
    )
    from oobc.frontend import ClassTable, parse_program

    table = ClassTable(parse_program(src))
    entries = [EntryPoint("A", "m", "explicit-flag")]
    result = analyze_all_entries(table, entries, AnalysisOptions(k=1))
    rows = {(e.method, e.index): e.states for e in heat_map(result)}
    # the callee body is visited once per calling context; the oracle is the
    # number of frame-pointer tokens the allocator mints for the callee
    assert rows[("A/f", 0)] == 2

    def callee_fps(res):
        return {
            n.state.fp
            for g in res.graphs
            for n in g.nodes.values()
            if n.state.fp.method == "A/f"
        }

    assert len(callee_fps(result)) == 2
    result0 = analyze_all_entries(table, entries, AnalysisOptions(k=0))
    assert len(callee_fps(result0)) == 1


def test_heat_map_zero_beyond_truncation():
    table = corpus_table("http_direct")
    pred = parse_predicates(f'(truncate (uses-api "{HTTP_EXECUTE}") "12")')
    entries = corpus_entries(table, "http_direct")
    full = analyze_all_entries(table, entries, AnalysisOptions())
    cut = analyze_all_entries(table, entries, AnalysisOptions(predicates=pred))
    full_rows = {(e.method, e.index) for e in heat_map(full)}
    cut_rows = {(e.method, e.index) for e in heat_map(cut)}
    missing = full_rows - cut_rows
    assert ("org/apache/http/client/HttpClient/execute", 0) in missing


def test_dot_export_minimal_graph():
    src = (
        "(stub class java/lang/Object extends java/lang/Object () ())"
        "(class A extends java/lang/Object ()"
        " ((method public static m () void (throws) (limit 1) (return void))))"
    )
    from oobc.frontend import ClassTable, parse_program

    table = ClassTable(parse_program(src))
    result = analyze_all_entries(
        table, [EntryPoint("A", "m", "explicit-flag")], AnalysisOptions()
    )
    views = compute_verdicts(result)
    dot = export_dot(result, views)
    assert dot.startswith("digraph states {")
    assert dot.rstrip().endswith("}")
    assert dot.count("->") == 1  # return to final


def test_dot_carries_split_color_attributes():
    result = analyze_corpus(
        "http_direct", predicates=parse_predicates(fixture_text("pred_uses_api.scm"))
    )
    views = compute_verdicts(result)
    dot = export_dot(result, views)
    assert 'fillcolor="red"' in dot
    assert "colorscheme=set312" in dot


def test_dot_and_json_are_deterministic():
    outs = set()
    for _ in range(3):
        result = analyze_corpus(
            "http_direct",
            predicates=parse_predicates(fixture_text("pred_uses_api.scm")),
        )
        views = compute_verdicts(result)
        pm = load_permission_map(fixture_text("permission_map.tsv"))
        findings = permission_report(result, {INTERNET}, pm)
        outs.add(
            export_dot(result, views)
            + export_json(result, views, ({INTERNET}, findings))
        )
    assert len(outs) == 1


def test_json_empty_analysis_echoes_options():
    table = corpus_table("straight_line")
    result = analyze_all_entries(table, [], AnalysisOptions(k=2, widen=False))
    doc = json.loads(export_json(result, compute_verdicts(result)))
    assert doc["schema"] == 1
    assert doc["nodes"] == [] and doc["edges"] == []
    assert doc["options"]["k"] == 2 and doc["options"]["widen"] is False


def test_json_single_node_graph_has_expected_shape():
    result = analyze_corpus("straight_line")
    doc = json.loads(export_json(result, compute_verdicts(result)))
    assert doc["schema"] == 1
    assert len(doc["nodes"]) == len(result.graphs[0].nodes)
    node = doc["nodes"][0]
    for field in (
        "id", "entry", "method", "index", "head", "fp", "ka", "root", "final",
        "truncated", "color", "storeSlice", "resolvedTargets",
    ):
        assert field in node
    ids = {n["id"] for n in doc["nodes"]}
    for edge in doc["edges"]:
        assert edge["from"] in ids and edge["to"] in ids


def test_json_store_slice_equals_abstract_gc():
    result = analyze_corpus("fields", widen=False)
    views = compute_verdicts(result)
    doc = json.loads(export_json(result, views))
    graph = result.graphs[0]
    by_id = {n["id"]: n for n in doc["nodes"]}
    for node in graph.sorted_nodes():
        expected = encode_store(abstract_gc(node.state, node.state.store))
        assert by_id[node.key]["storeSlice"] == expected


def test_permission_witnesses_resolve_to_graph_nodes():
    result = _http_result()
    views = compute_verdicts(result)
    pm = load_permission_map(fixture_text("permission_map.tsv"))
    findings = permission_report(result, set(), pm)
    doc = json.loads(export_json(result, views, (set(), findings)))
    ids = {n["id"] for n in doc["nodes"]}
    for f in doc["permissions"]["findings"]:
        if f["witnessState"] is not None:
            assert f["witnessState"] in ids
