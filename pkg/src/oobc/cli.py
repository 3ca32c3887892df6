"""Command-line interface.

`oobc analyze` runs the abstract analysis and writes reports; `oobc run`
executes a program on the concrete interpreter and emits a JSON trace.
Exit codes: 0 success, 1 input error, 2 analysis incomplete (cutoff or
truncation; reports are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .concrete import ConcreteState, run_concrete
from .domain import encode_store, Store
from .engine import (
    AnalysisOptions,
    ConfigError,
    DEFAULT_LIFECYCLE,
    analyze_all_entries,
    find_entry_points,
)
from .frontend import ClassTable, CodeRef, FrontendError, SynthCode, parse_program, stmt_to_text
from .predicates import EMPTY_PROGRAM, PredicateError, parse_predicates
from .reports import (
    PermissionMapError,
    api_dump,
    compute_verdicts,
    export_dot,
    export_json,
    heat_map,
    load_manifest,
    load_permission_map,
    permission_report,
    render_api_dump,
    render_heat_map,
    render_permission_report,
)
from .sexp import SexpError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oobc", description="Object-oriented bytecode analyzer"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="explore the abstract state space")
    pa.add_argument("program", help="program file (.oobc)")
    pa.add_argument("--k", type=int, default=0, help="call-site context depth")
    widen = pa.add_mutually_exclusive_group()
    widen.add_argument("--widen", dest="widen", action="store_true", default=True)
    widen.add_argument("--no-widen", dest="widen", action="store_false")
    pa.add_argument("--gc", action="store_true", help="abstract garbage collection")
    pa.add_argument("--cutoff", type=int, default=None, help="max transitions")
    pa.add_argument(
        "--entry", action="append", default=[], metavar="CLASS/METHOD",
        help="explicit entry point (repeatable)",
    )
    pa.add_argument("--lifecycle", default=None,
                    help="comma-separated lifecycle method names")
    pa.add_argument("--single-pass", action="store_true",
                    help="one sweep over the entry points instead of a fixed point")
    pa.add_argument("--workers", type=int, default=1)
    pa.add_argument("--predicates", default=None, help="predicate file")
    pa.add_argument("--permission-map", default=None, help="API permission map file")
    pa.add_argument("--manifest", default=None, help="declared permissions file")
    pa.add_argument("--dot", default=None, help="write the DOT state graph here")
    pa.add_argument("--json", default=None, help="write the JSON export here")
    pa.add_argument("--report", default=None, metavar="DIR",
                    help="write every report into this directory")

    pr = sub.add_parser("run", help="run the concrete interpreter")
    pr.add_argument("program", help="program file (.oobc)")
    pr.add_argument("--entry", required=True, metavar="CLASS/METHOD")
    pr.add_argument("--fuel", type=int, default=500)
    pr.add_argument("--trace", default=None, help="write the JSON trace here")

    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_run(args)
    except (SexpError, FrontendError, ConfigError, PredicateError, PermissionMapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _cmd_analyze(args) -> int:
    program = parse_program(_read(args.program))
    table = ClassTable(program)

    predicates = EMPTY_PROGRAM
    if args.predicates:
        predicates = parse_predicates(_read(args.predicates))

    lifecycle = DEFAULT_LIFECYCLE
    if args.lifecycle is not None:
        lifecycle = tuple(n.strip() for n in args.lifecycle.split(",") if n.strip())

    options = AnalysisOptions(
        k=args.k,
        widen=args.widen,
        gc=args.gc,
        max_steps=args.cutoff,
        single_pass=args.single_pass,
        workers=max(1, args.workers),
        predicates=predicates,
        lifecycle=lifecycle,
    )
    if options.gc and options.widen:
        print(
            "note: abstract GC is disabled under store widening", file=sys.stderr
        )
        options.gc = False

    entries = find_entry_points(table, lifecycle, tuple(args.entry))
    if not entries:
        print("warning: no entry points found; the state graph is empty", file=sys.stderr)

    result = analyze_all_entries(table, entries, options)
    views = compute_verdicts(result)

    permissions = None
    if args.permission_map or args.manifest:
        pm = load_permission_map(_read(args.permission_map)) if args.permission_map else {}
        declared = load_manifest(_read(args.manifest)) if args.manifest else set()
        findings = permission_report(result, declared, pm)
        permissions = (declared, findings)

    dot_text = export_dot(result, views)
    json_text = export_json(result, views, permissions, source=args.program)

    if args.dot:
        Path(args.dot).write_text(dot_text, encoding="utf-8")
    if args.json:
        Path(args.json).write_text(json_text, encoding="utf-8")
    if args.report:
        report_dir = Path(args.report)
        report_dir.mkdir(parents=True, exist_ok=True)
        (report_dir / "graph.dot").write_text(dot_text, encoding="utf-8")
        (report_dir / "analysis.json").write_text(json_text, encoding="utf-8")
        (report_dir / "api_dump.txt").write_text(
            render_api_dump(api_dump(result)), encoding="utf-8"
        )
        (report_dir / "heatmap.txt").write_text(
            render_heat_map(heat_map(result)), encoding="utf-8"
        )
        if permissions is not None:
            declared, findings = permissions
            (report_dir / "permissions.txt").write_text(
                render_permission_report(declared, findings), encoding="utf-8"
            )

    nodes = sum(len(g.nodes) for g in result.graphs)
    edges = sum(len(g.edges) for g in result.graphs)
    status = "incomplete" if result.incomplete else "complete"
    print(
        f"{len(result.entries)} entry point(s), {nodes} states, {edges} transitions, "
        f"{result.passes} pass(es), {status}"
    )
    return 2 if result.incomplete else 0


def _trace_state_json(state: ConcreteState) -> dict:
    code = state.code
    if isinstance(code, CodeRef):
        method, index = code.method.qualified_name, code.index
        synthetic = False
    elif isinstance(code, SynthCode):
        method, index = code.rest.method.qualified_name, code.rest.index
        synthetic = True
    else:
        method, index, synthetic = None, None, False
    stmt = code.head()
    return {
        "method": method,
        "index": index,
        "synthetic": synthetic,
        "head": stmt_to_text(stmt) if stmt is not None else None,
        "frame": state.fp.serial,
        "final": state.is_final,
    }


def _cmd_run(args) -> int:
    program = parse_program(_read(args.program))
    table = ClassTable(program)
    if "/" not in args.entry:
        print("error: --entry must be CLASS/METHOD", file=sys.stderr)
        return 1
    cls, mname = args.entry.rsplit("/", 1)
    try:
        entry, _ = table.resolve_method(cls, mname)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    trace = run_concrete(table, entry, fuel=args.fuel)
    doc = {
        "program": args.program,
        "entry": args.entry,
        "fuel": args.fuel,
        "terminal": trace.terminal,
        "error": trace.error,
        "steps": len(trace.states) - 1,
        "apiCalls": trace.api_call_names(),
        "states": [_trace_state_json(s) for s in trace.states],
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.trace:
        Path(args.trace).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    if trace.terminal == "error":
        print(f"run halted: {trace.error}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
