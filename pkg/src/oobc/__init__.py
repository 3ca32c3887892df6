"""Abstract-machine reachability analysis for an object-oriented bytecode."""

from .domain import (
    AbstractState,
    Store,
    Value,
    join_store,
    join_value,
    store_leq,
    value_leq,
)
from .engine import (
    AnalysisOptions,
    AnalysisResult,
    EntryPoint,
    StateGraph,
    abstract_gc,
    analyze_all_entries,
    analyze_program,
    explore,
    find_entry_points,
)
from .frontend import (
    ClassTable,
    FrontendError,
    Program,
    build_label_map,
    parse_program,
    print_program,
    resolve_method,
)
from .machine import AllocationPolicy, Machine
from .concrete import abstracts, run_concrete
from .predicates import (
    PredicateProgram,
    StateVerdict,
    evaluate,
    parse_predicates,
    uses_api,
    uses_name,
)
from .reports import (
    api_dump,
    compute_verdicts,
    export_dot,
    export_json,
    heat_map,
    load_manifest,
    load_permission_map,
    permission_report,
)

__all__ = [
    "AbstractState",
    "AllocationPolicy",
    "AnalysisOptions",
    "AnalysisResult",
    "ClassTable",
    "EntryPoint",
    "FrontendError",
    "Machine",
    "PredicateProgram",
    "Program",
    "StateGraph",
    "StateVerdict",
    "Store",
    "Value",
    "abstract_gc",
    "abstracts",
    "analyze_all_entries",
    "analyze_program",
    "api_dump",
    "build_label_map",
    "compute_verdicts",
    "evaluate",
    "explore",
    "export_dot",
    "export_json",
    "find_entry_points",
    "heat_map",
    "join_store",
    "join_value",
    "load_manifest",
    "load_permission_map",
    "parse_predicates",
    "parse_program",
    "permission_report",
    "print_program",
    "resolve_method",
    "run_concrete",
    "store_leq",
    "uses_api",
    "uses_name",
    "value_leq",
]
