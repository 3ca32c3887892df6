"""Analyst predicates: color rules that highlight states and truncate rules
that prune exploration beyond matching states.

Two surface forms are accepted in predicate files. The lambda form mirrors
hand-written filter functions::

    (lambda (state)
      (if (uses-API? state "org/apache/http/client/HttpClient/execute" st-attr)
          "red,colorscheme=set312"
          #f))

with `cond` for multiple clauses, and `truncate?` selecting the pruning
action. The declarative core states the same rules directly::

    (color (uses-api "org/apache/http/client/HttpClient/execute")
           "red,colorscheme=set312")
    (truncate (uses-api "...") "12,colorscheme=set312")

Matchers compose with (and ...), (or ...), (not ...). Rule order is
significant: the first matching rule decides the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .sexp import Node, Pos, SexpError, SList, Str, Sym, parse_all


class PredicateError(Exception):
    def __init__(self, message: str, pos: Pos):
        super().__init__(f"{message} at {pos}")
        self.message = message
        self.pos = pos


# ---------------------------------------------------------------------------
# Rule representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UsesApi:
    name: str


@dataclass(frozen=True)
class UsesName:
    name: str


@dataclass(frozen=True)
class And:
    parts: tuple["Matcher", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Matcher", ...]


@dataclass(frozen=True)
class Not:
    part: "Matcher"


Matcher = Union[UsesApi, UsesName, And, Or, Not]

COLOR = "color"
TRUNCATE = "truncate"


@dataclass(frozen=True)
class Rule:
    matcher: Matcher
    action: str  # color | truncate
    color: str


@dataclass(frozen=True)
class PredicateProgram:
    rules: tuple[Rule, ...]

    def __len__(self) -> int:
        return len(self.rules)


EMPTY_PROGRAM = PredicateProgram(())


@dataclass(frozen=True)
class StateVerdict:
    color: Optional[str] = None
    truncated: bool = False
    matched_rule: Optional[int] = None


NO_MATCH = StateVerdict()


# ---------------------------------------------------------------------------
# State facts: the queryable view of a machine state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateFacts:
    """What predicates can see of a state: its position and, for invoke
    heads, the written target plus every resolved callee."""

    method_qual: Optional[str]
    is_invoke: bool
    written_target: Optional[str]
    resolved: tuple[str, ...]
    apis: tuple[str, ...]


def uses_api(facts: StateFacts, api_name: str) -> bool:
    """The head statement invokes the named API, directly or through a
    resolved (possibly reflective) target."""
    if not facts.is_invoke:
        return False
    return api_name == facts.written_target or api_name in facts.resolved


def uses_name(facts: StateFacts, qualified_name: str) -> bool:
    """The state sits inside the named method's body, or its head statement
    invokes it."""
    if facts.method_qual == qualified_name:
        return True
    if facts.is_invoke and (
        qualified_name == facts.written_target or qualified_name in facts.resolved
    ):
        return True
    return False


def _matches(matcher: Matcher, facts: StateFacts) -> bool:
    if isinstance(matcher, UsesApi):
        return uses_api(facts, matcher.name)
    if isinstance(matcher, UsesName):
        return uses_name(facts, matcher.name)
    if isinstance(matcher, And):
        return all(_matches(p, facts) for p in matcher.parts)
    if isinstance(matcher, Or):
        return any(_matches(p, facts) for p in matcher.parts)
    if isinstance(matcher, Not):
        return not _matches(matcher.part, facts)
    raise TypeError(f"not a matcher: {matcher!r}")


def evaluate(program: PredicateProgram, facts: StateFacts) -> StateVerdict:
    """First matching rule wins; no match yields the empty verdict."""
    for i, rule in enumerate(program.rules):
        if _matches(rule.matcher, facts):
            return StateVerdict(
                color=rule.color,
                truncated=rule.action == TRUNCATE,
                matched_rule=i,
            )
    return NO_MATCH


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_predicates(text: str) -> PredicateProgram:
    rules: list[Rule] = []
    for form in parse_all(text):
        rules.extend(_parse_form(form))
    return PredicateProgram(tuple(rules))


def _parse_form(form: Node) -> list[Rule]:
    if not isinstance(form, SList) or len(form) == 0 or not isinstance(form[0], Sym):
        raise PredicateError("expected a (lambda ...), (color ...), or (truncate ...) form", form.pos)
    head = form[0].name
    if head == "lambda":
        return _parse_lambda(form)
    if head in (COLOR, TRUNCATE):
        if len(form) != 3:
            raise PredicateError(f"({head} matcher \"color\") takes two arguments", form.pos)
        matcher = _parse_matcher(form[1], param=None)
        color = _parse_color(form[2])
        return [Rule(matcher, head, color)]
    raise PredicateError(f"unknown predicate form '{head}'", form.pos)


def _parse_lambda(form: SList) -> list[Rule]:
    if len(form) != 3 or not isinstance(form[1], SList) or len(form[1]) != 1:
        raise PredicateError("lambda takes one parameter and one body", form.pos)
    param = form[1][0]
    if not isinstance(param, Sym):
        raise PredicateError("lambda parameter must be a symbol", form.pos)
    body = form[2]
    if not isinstance(body, SList) or len(body) == 0 or not isinstance(body[0], Sym):
        raise PredicateError("lambda body must be (if ...) or (cond ...)", form.pos)
    if body[0].name == "if":
        if len(body) != 4:
            raise PredicateError("if takes test, color, and else", body.pos)
        rule = _parse_clause(body[1], body[2], param.name)
        _expect_false(body[3])
        return [rule]
    if body[0].name == "cond":
        rules = []
        for clause in body.items[1:]:
            if not isinstance(clause, SList) or len(clause) != 2:
                raise PredicateError("cond clause must be [test color]", body.pos)
            if isinstance(clause[0], Sym) and clause[0].name == "else":
                _expect_false(clause[1])
                continue
            rules.append(_parse_clause(clause[0], clause[1], param.name))
        return rules
    raise PredicateError("lambda body must be (if ...) or (cond ...)", body.pos)


def _expect_false(node: Node) -> None:
    if not (isinstance(node, Sym) and node.name == "#f"):
        raise PredicateError("fall-through branch must be #f", node.pos)


def _parse_clause(test: Node, color_node: Node, param: str) -> Rule:
    action = COLOR
    if _mentions_truncate(test):
        action = TRUNCATE
    matcher = _parse_matcher(test, param)
    return Rule(matcher, action, _parse_color(color_node))


def _mentions_truncate(node: Node) -> bool:
    if isinstance(node, SList) and len(node) > 0 and isinstance(node[0], Sym):
        if node[0].name == "truncate?":
            return True
        return any(_mentions_truncate(n) for n in node.items[1:])
    return False


def _parse_color(node: Node) -> str:
    if not isinstance(node, Str):
        raise PredicateError("color must be a string literal", node.pos)
    if not node.value.strip():
        raise PredicateError("color must be non-empty", node.pos)
    return node.value


_PRIMITIVES = {
    "uses-API?": UsesApi,
    "uses-api": UsesApi,
    "uses-name?": UsesName,
    "uses-name": UsesName,
    "truncate?": UsesApi,  # truncation matches on the head statement's API
}


def _parse_matcher(node: Node, param: Optional[str]) -> Matcher:
    if not isinstance(node, SList) or len(node) == 0 or not isinstance(node[0], Sym):
        raise PredicateError("expected a matcher form", node.pos)
    head = node[0].name
    if head in ("and", "or", "not"):
        parts = tuple(_parse_matcher(n, param) for n in node.items[1:])
        if head == "not":
            if len(parts) != 1:
                raise PredicateError("not takes one matcher", node.pos)
            return Not(parts[0])
        if not parts:
            raise PredicateError(f"{head} needs at least one matcher", node.pos)
        return And(parts) if head == "and" else Or(parts)
    if head not in _PRIMITIVES:
        raise PredicateError(f"unknown primitive '{head}'", node.pos)
    args = list(node.items[1:])
    if param is not None:
        if not args or not (isinstance(args[0], Sym) and args[0].name == param):
            raise PredicateError(
                f"'{head}' must apply to the lambda parameter '{param}'", node.pos
            )
        args.pop(0)
    # a trailing st-attr marker is accepted and ignored
    if args and isinstance(args[-1], Sym) and args[-1].name == "st-attr":
        args.pop()
    if len(args) != 1 or not isinstance(args[0], Str):
        raise PredicateError(f"'{head}' takes one string argument", node.pos)
    # qualified names cannot contain whitespace; strip any that slipped in
    name = "".join(args[0].value.split())
    return _PRIMITIVES[head](name)
