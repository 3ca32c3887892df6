from pathlib import Path

import pytest

from oobc.engine import AnalysisOptions, EntryPoint, analyze_all_entries, find_entry_points
from oobc.frontend import ClassTable, parse_program

CORPUS_DIR = Path(__file__).parent / "corpus"
FIXTURE_DIR = Path(__file__).parent / "fixtures"

# every corpus program and its designated entry points, in analysis order
CORPUS_ENTRIES: dict[str, tuple[str, ...]] = {
    "straight_line": ("Main/main",),
    "branching": ("Main/main",),
    "loop_count": ("Main/main",),
    "fields": ("Main/main",),
    "inherit_virtual": ("Main/main",),
    "invoke_kinds": ("Main/main",),
    "recursion": ("Main/main",),
    "multi_entry": ("App/onCreate", "App/onClick"),
    "reflect_env_direct": ("Main/main",),
    "reflect_env_twin": ("Main/main",),
    "http_direct": ("Main/main",),
    "http_twin": ("Main/main",),
    "logger_direct": ("Main/main",),
    "logger_twin": ("Main/main",),
    "instanceof_merge": ("Main/main",),
    "interface_shapes": ("Main/main",),
    "getmethod_override": ("Main/main",),
    "strings_merge": ("Main/main",),
    "reflect_top": ("Main/main",),
}

TWIN_PAIRS = [
    ("reflect_env_direct", "reflect_env_twin"),
    ("http_direct", "http_twin"),
    ("logger_direct", "logger_twin"),
]


def corpus_source(name: str) -> str:
    return (CORPUS_DIR / f"{name}.oobc").read_text(encoding="utf-8")


def corpus_table(name: str) -> ClassTable:
    return ClassTable(parse_program(corpus_source(name)))


def corpus_entries(table: ClassTable, name: str) -> list[EntryPoint]:
    return find_entry_points(table, explicit=CORPUS_ENTRIES[name])


def analyze_corpus(name: str, **option_kwargs):
    table = corpus_table(name)
    entries = corpus_entries(table, name)
    options = AnalysisOptions(**option_kwargs)
    return analyze_all_entries(table, entries, options)


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / name).read_text(encoding="utf-8")


@pytest.fixture
def table_of():
    return corpus_table
