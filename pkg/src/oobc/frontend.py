"""Bytecode frontend: AST, parser, validation, class table, code references.

The input language is an S-expression object-oriented bytecode. A program
is a sequence of class definitions; methods hold flat statement lists with
labels as jump targets. `parse_program` yields a validated, immutable
`Program`; `ClassTable` adds hierarchy queries and method resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .sexp import Int, Node, Pos, SexpError, SList, Str, Sym, UNKNOWN_POS, parse_all

ROOT_CLASS = "java/lang/Object"

CLASS_ATTRIBUTES = frozenset(
    {"public", "private", "protected", "final", "abstract", "static", "stub"}
)

ATOMIC_OPS = {
    "add": 2, "sub": 2, "mul": 2, "div": 2,
    "eq": 2, "lt": 2, "gt": 2,
    "not": 1, "and": 2, "or": 2,
}

PRIMITIVE_TYPES = frozenset({"int", "byte", "char", "boolean", "void"})

INVOKE_KINDS = {
    "invoke-static": "static",
    "invoke-direct": "direct",
    "invoke-virtual": "virtual",
    "invoke-interface": "interface",
    "invoke-interafce": "interface",  # keyword spelling accepted as-is
    "invoke-super": "super",
}

RET_REG = "ret"
THIS_REG = "this"


class FrontendError(Exception):
    """Semantic validation failure; names the offending symbol."""

    def __init__(self, message: str, pos: Pos = UNKNOWN_POS):
        where = f" at {pos}" if pos != UNKNOWN_POS else ""
        super().__init__(f"{message}{where}")
        self.message = message
        self.pos = pos


# ---------------------------------------------------------------------------
# Atomic expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class This:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class TrueLit:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class FalseLit:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class NullLit:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class VoidLit:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Name:
    name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class AtomicOp:
    op: str
    args: tuple["AExp", ...]
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class InstanceOf:
    expr: "AExp"
    class_name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


AExp = Union[This, TrueLit, FalseLit, NullLit, VoidLit, Name, IntLit, AtomicOp, InstanceOf]


# ---------------------------------------------------------------------------
# Complex expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class New:
    class_name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Invoke:
    kind: str  # static | direct | virtual | interface | super
    target: str  # fully qualified: some/pkg/Class/method
    args: tuple[AExp, ...]
    types: tuple[str, ...]
    pos: Pos = field(default=UNKNOWN_POS, compare=False)

    @property
    def target_class(self) -> str:
        return self.target.rsplit("/", 1)[0]

    @property
    def method_name(self) -> str:
        return self.target.rsplit("/", 1)[1]


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Label:
    name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Nop:
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Line:
    number: int
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Goto:
    label: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class If:
    guard: AExp
    label: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Assign:
    dest: str
    expr: Union[AExp, New]
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Return:
    value: AExp
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class FieldPut:
    obj: AExp
    field_name: str
    value: AExp
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class FieldGet:
    dest: str
    obj: AExp
    field_name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class ConstString:
    dest: str
    literal: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


Stmt = Union[Label, Nop, Line, Goto, If, Assign, Return, FieldPut, FieldGet, ConstString, Invoke]


# ---------------------------------------------------------------------------
# Definitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldDef:
    attributes: frozenset[str]
    name: str
    type: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class MethodDef:
    attributes: frozenset[str]
    name: str
    param_types: tuple[str, ...]
    return_type: str
    throws: tuple[str, ...]
    limit: int  # declared register count; stored, unused by the machine
    body: tuple[Stmt, ...]
    owner: str  # declaring class name
    pos: Pos = field(default=UNKNOWN_POS, compare=False)

    @property
    def qualified_name(self) -> str:
        return f"{self.owner}/{self.name}"

    @property
    def is_static(self) -> bool:
        return "static" in self.attributes


@dataclass(frozen=True)
class ClassDef:
    attributes: frozenset[str]
    name: str
    superclass: str
    fields: tuple[FieldDef, ...]
    methods: tuple[MethodDef, ...]
    pos: Pos = field(default=UNKNOWN_POS, compare=False)

    @property
    def is_stub(self) -> bool:
        """External library stand-in; its methods are reported as API calls."""
        return "stub" in self.attributes


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDef, ...]

    def class_named(self, name: str) -> Optional[ClassDef]:
        for cd in self.classes:
            if cd.name == name:
                return cd
        return None


# ---------------------------------------------------------------------------
# Code references
#
# A "code" value names a suffix of some method body: (method, index). The
# reflective instantiation rule prepends a synthesized constructor call, so
# code may also be a synthetic statement consed onto a real suffix. Code
# values are the control component of machine states; equality on CodeRef is
# by method identity so distinct parses never alias.
# ---------------------------------------------------------------------------

SiteId = tuple


class CodeRef:
    __slots__ = ("method", "index")

    def __init__(self, method: MethodDef, index: int):
        self.method = method
        self.index = index

    def head(self) -> Optional[Stmt]:
        if self.index < len(self.method.body):
            return self.method.body[self.index]
        return None

    def tail(self) -> "CodeRef":
        return CodeRef(self.method, self.index + 1)

    def enclosing_method(self) -> MethodDef:
        return self.method

    def site(self) -> SiteId:
        return (self.method.qualified_name, self.index)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CodeRef)
            and self.method is other.method
            and self.index == other.index
        )

    def __hash__(self) -> int:
        return hash((id(self.method), self.index))

    def __repr__(self) -> str:
        return f"<{self.method.qualified_name}@{self.index}>"


class SynthCode:
    """A synthesized statement prepended to a real code suffix."""

    __slots__ = ("stmt", "rest", "_text")

    def __init__(self, stmt: Stmt, rest: CodeRef):
        self.stmt = stmt
        self.rest = rest
        self._text = stmt_to_text(stmt)

    def head(self) -> Stmt:
        return self.stmt

    def tail(self) -> CodeRef:
        return self.rest

    def enclosing_method(self) -> MethodDef:
        return self.rest.enclosing_method()

    def site(self) -> SiteId:
        return self.rest.site() + ("synth:" + self._text,)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SynthCode)
            and self.stmt == other.stmt
            and self.rest == other.rest
        )

    def __hash__(self) -> int:
        return hash((self._text, self.rest))

    def __repr__(self) -> str:
        return f"<synth {self._text} : {self.rest!r}>"


class HaltCode:
    """Terminal control marker for states produced by a return to halt."""

    __slots__ = ()

    def head(self) -> None:
        return None

    def tail(self) -> "HaltCode":
        return self

    def enclosing_method(self) -> None:
        return None

    def site(self) -> SiteId:
        return ("<halt>",)

    def __repr__(self) -> str:
        return "<halt>"


HALT_CODE = HaltCode()

Code = Union[CodeRef, SynthCode, HaltCode]


def param_register(i: int) -> str:
    """Register name receiving the i-th declared argument."""
    return f"p{i}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_program(text: str) -> Program:
    """Parse and validate a program; raises SexpError or FrontendError."""
    forms = parse_all(text)
    classes = tuple(_parse_class(form) for form in forms)
    program = Program(classes)
    _validate(program)
    return program


def _expect_sym(node: Node, what: str) -> str:
    if not isinstance(node, Sym):
        raise FrontendError(f"expected {what}", _pos_of(node))
    return node.name


def _pos_of(node: Node) -> Pos:
    return node.pos


def _parse_class(form: Node) -> ClassDef:
    if not isinstance(form, SList) or len(form) < 6:
        raise FrontendError("malformed class definition", _pos_of(form))
    items = list(form.items)
    attrs = []
    while items and isinstance(items[0], Sym) and items[0].name != "class":
        attrs.append(items.pop(0).name)
    if not items or not isinstance(items[0], Sym) or items[0].name != "class":
        raise FrontendError("expected 'class' keyword", form.pos)
    bad = [a for a in attrs if a not in CLASS_ATTRIBUTES]
    if bad:
        raise FrontendError(f"unknown attribute '{bad[0]}'", form.pos)
    items.pop(0)
    if len(items) != 5:
        raise FrontendError("malformed class definition", form.pos)
    name = _expect_sym(items[0], "class name")
    if _expect_sym(items[1], "'extends'") != "extends":
        raise FrontendError("expected 'extends'", _pos_of(items[1]))
    superclass = _expect_sym(items[2], "superclass name")
    if not isinstance(items[3], SList) or not isinstance(items[4], SList):
        raise FrontendError("expected field list and method list", form.pos)
    fields = tuple(_parse_field(f) for f in items[3])
    methods = tuple(_parse_method(m, name) for m in items[4])
    return ClassDef(frozenset(attrs), name, superclass, fields, methods, form.pos)


def _parse_field(form: Node) -> FieldDef:
    if not isinstance(form, SList) or len(form) < 3:
        raise FrontendError("malformed field definition", _pos_of(form))
    if _expect_sym(form[0], "'field'") != "field":
        raise FrontendError("expected 'field'", form.pos)
    parts = [_expect_sym(n, "field attribute/name/type") for n in form.items[1:]]
    name, type_ = parts[-2], parts[-1]
    attrs = frozenset(parts[:-2])
    return FieldDef(attrs, name, type_, form.pos)


def _parse_method(form: Node, owner: str) -> MethodDef:
    if not isinstance(form, SList) or len(form) < 6:
        raise FrontendError("malformed method definition", _pos_of(form))
    if _expect_sym(form[0], "'method'") != "method":
        raise FrontendError("expected 'method'", form.pos)
    items = list(form.items[1:])
    # attributes run up to the method name, which is the symbol immediately
    # before the parameter type list
    param_idx = next(
        (i for i, n in enumerate(items) if isinstance(n, SList)), None
    )
    if param_idx is None or param_idx < 1:
        raise FrontendError("malformed method header", form.pos)
    attrs = [_expect_sym(n, "method attribute") for n in items[: param_idx - 1]]
    name = _expect_sym(items[param_idx - 1], "method name")
    param_types = tuple(_expect_sym(t, "parameter type") for t in items[param_idx])
    rest = items[param_idx + 1 :]
    if len(rest) < 3:
        raise FrontendError("method missing return type, throws, or limit", form.pos)
    return_type = _expect_sym(rest[0], "return type")
    throws_form, limit_form = rest[1], rest[2]
    if (
        not isinstance(throws_form, SList)
        or len(throws_form) < 1
        or _expect_sym(throws_form[0], "'throws'") != "throws"
    ):
        raise FrontendError("expected (throws ...)", _pos_of(throws_form))
    throws = tuple(_expect_sym(t, "throws class") for t in throws_form.items[1:])
    if (
        not isinstance(limit_form, SList)
        or len(limit_form) != 2
        or _expect_sym(limit_form[0], "'limit'") != "limit"
        or not isinstance(limit_form[1], Int)
    ):
        raise FrontendError("expected (limit n)", _pos_of(limit_form))
    limit = limit_form[1].value
    if limit < 0:
        raise FrontendError("negative register limit", _pos_of(limit_form))
    body = []
    for s in rest[3:]:
        body.extend(_parse_stmt(s))
    return MethodDef(
        frozenset(attrs), name, param_types, return_type, throws, limit,
        tuple(body), owner, form.pos,
    )


def _parse_stmt(form: Node) -> list[Stmt]:
    """Parse one surface statement; assignment from an invocation desugars
    into the invocation followed by a move from the return register."""
    if not isinstance(form, SList) or len(form) == 0:
        raise FrontendError("malformed statement", _pos_of(form))
    head = _expect_sym(form[0], "statement keyword")
    pos = form.pos
    if head == "label":
        _arity(form, 2)
        return [Label(_expect_sym(form[1], "label"), pos)]
    if head == "nop":
        _arity(form, 1)
        return [Nop(pos)]
    if head == "line":
        _arity(form, 2)
        if not isinstance(form[1], Int):
            raise FrontendError("line number must be an integer", pos)
        return [Line(form[1].value, pos)]
    if head == "goto":
        _arity(form, 2)
        return [Goto(_expect_sym(form[1], "label"), pos)]
    if head == "if":
        _arity(form, 3)
        guard = _parse_aexp(form[1])
        target = form[2]
        if (
            not isinstance(target, SList)
            or len(target) != 2
            or _expect_sym(target[0], "'goto'") != "goto"
        ):
            raise FrontendError("if requires (goto label)", pos)
        return [If(guard, _expect_sym(target[1], "label"), pos)]
    if head == "assign":
        _arity(form, 3)
        dest = _expect_sym(form[1], "register name")
        rhs = form[2]
        if isinstance(rhs, SList) and len(rhs) > 0 and isinstance(rhs[0], Sym):
            kw = rhs[0].name
            if kw == "new":
                _arity(rhs, 2)
                return [Assign(dest, New(_expect_sym(rhs[1], "class name"), rhs.pos), pos)]
            if kw in INVOKE_KINDS:
                inv = _parse_invoke(rhs)
                return [inv, Assign(dest, Name(RET_REG, pos), pos)]
        return [Assign(dest, _parse_aexp(rhs), pos)]
    if head == "return":
        _arity(form, 2)
        return [Return(_parse_aexp(form[1]), pos)]
    if head == "field-put":
        _arity(form, 4)
        return [
            FieldPut(
                _parse_aexp(form[1]),
                _expect_sym(form[2], "field name"),
                _parse_aexp(form[3]),
                pos,
            )
        ]
    if head == "field-get":
        _arity(form, 4)
        return [
            FieldGet(
                _expect_sym(form[1], "register name"),
                _parse_aexp(form[2]),
                _expect_sym(form[3], "field name"),
                pos,
            )
        ]
    if head == "const-string":
        _arity(form, 3)
        dest = _expect_sym(form[1], "register name")
        if not isinstance(form[2], Str):
            raise FrontendError("const-string requires a string literal", pos)
        return [ConstString(dest, form[2].value, pos)]
    if head in INVOKE_KINDS:
        return [_parse_invoke(form)]
    raise FrontendError(f"unknown statement '{head}'", pos)


def _arity(form: SList, n: int) -> None:
    if len(form) != n:
        raise FrontendError(
            f"'{form[0].name}' expects {n - 1} argument(s)", form.pos
        )


def _parse_invoke(form: SList) -> Invoke:
    _arity(form, 4)
    kind = INVOKE_KINDS[form[0].name]
    target = _expect_sym(form[1], "qualified method name")
    if "/" not in target:
        raise FrontendError(
            f"invoke target '{target}' must be class-qualified", form.pos
        )
    args_form, types_form = form[2], form[3]
    if not isinstance(args_form, SList) or not isinstance(types_form, SList):
        raise FrontendError("invoke requires argument and type lists", form.pos)
    args = tuple(_parse_aexp(a) for a in args_form)
    types = tuple(_expect_sym(t, "argument type") for t in types_form)
    return Invoke(kind, target, args, types, form.pos)


def _parse_aexp(node: Node) -> AExp:
    pos = _pos_of(node)
    if isinstance(node, Int):
        return IntLit(node.value, pos)
    if isinstance(node, Sym):
        return {
            "this": This(pos),
            "true": TrueLit(pos),
            "false": FalseLit(pos),
            "null": NullLit(pos),
            "void": VoidLit(pos),
        }.get(node.name) or Name(node.name, pos)
    if isinstance(node, SList) and len(node) > 0 and isinstance(node[0], Sym):
        head = node[0].name
        if head == "instance-of":
            _arity(node, 3)
            return InstanceOf(_parse_aexp(node[1]), _expect_sym(node[2], "class name"), pos)
        if head in ATOMIC_OPS:
            want = ATOMIC_OPS[head]
            if len(node) != want + 1:
                raise FrontendError(f"operator '{head}' expects {want} operand(s)", pos)
            return AtomicOp(head, tuple(_parse_aexp(a) for a in node.items[1:]), pos)
        raise FrontendError(f"unknown operator '{head}'", pos)
    raise FrontendError("malformed atomic expression", pos)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _validate(program: Program) -> None:
    by_name: dict[str, ClassDef] = {}
    for cd in program.classes:
        if cd.name in by_name:
            raise FrontendError(f"duplicate class '{cd.name}'", cd.pos)
        by_name[cd.name] = cd

    for cd in program.classes:
        if cd.superclass not in by_name:
            raise FrontendError(
                f"unknown superclass '{cd.superclass}' of '{cd.name}'", cd.pos
            )
        seen_fields: set[str] = set()
        for fd in cd.fields:
            if fd.name in seen_fields:
                raise FrontendError(
                    f"duplicate field '{fd.name}' in '{cd.name}'", fd.pos
                )
            seen_fields.add(fd.name)
            if fd.type not in PRIMITIVE_TYPES and fd.type not in by_name:
                raise FrontendError(
                    f"unknown field type '{fd.type}' in '{cd.name}'", fd.pos
                )
        seen_methods: set[str] = set()
        for md in cd.methods:
            if md.name in seen_methods:
                raise FrontendError(
                    f"duplicate method '{md.name}' in '{cd.name}' (overloading unsupported)",
                    md.pos,
                )
            seen_methods.add(md.name)
            _validate_body(md, by_name)

    # inheritance must be acyclic and terminate at the root class, whose
    # self-extends is the only permitted cycle
    for cd in program.classes:
        seen: list[str] = []
        cur = cd
        while True:
            if cur.name in seen:
                raise FrontendError(
                    f"inheritance cycle through '{cur.name}'", cd.pos
                )
            seen.append(cur.name)
            if cur.name == ROOT_CLASS:
                if cur.superclass != ROOT_CLASS:
                    raise FrontendError(
                        f"root class must extend itself, found '{cur.superclass}'",
                        cur.pos,
                    )
                break
            cur = by_name[cur.superclass]


def _validate_body(md: MethodDef, by_name: dict[str, ClassDef]) -> None:
    labels: dict[str, int] = {}
    for stmt in md.body:
        if isinstance(stmt, Label):
            if stmt.name in labels:
                raise FrontendError(
                    f"duplicate label '{stmt.name}' in {md.qualified_name}", stmt.pos
                )
            labels[stmt.name] = 1
    for stmt in md.body:
        target = None
        if isinstance(stmt, Goto):
            target = stmt.label
        elif isinstance(stmt, If):
            target = stmt.label
        if target is not None and target not in labels:
            raise FrontendError(
                f"dangling label '{target}' in {md.qualified_name}", stmt.pos
            )
        dest = None
        if isinstance(stmt, (Assign, FieldGet)):
            dest = stmt.dest
        elif isinstance(stmt, ConstString):
            dest = stmt.dest
        if dest == RET_REG:
            raise FrontendError(
                f"register '{RET_REG}' is reserved and cannot be assigned", stmt.pos
            )
        if isinstance(stmt, Assign) and isinstance(stmt.expr, New):
            if stmt.expr.class_name not in by_name:
                raise FrontendError(
                    f"unknown class '{stmt.expr.class_name}' in new", stmt.pos
                )
    if "void" in md.param_types:
        raise FrontendError(f"void parameter in {md.qualified_name}", md.pos)


# ---------------------------------------------------------------------------
# Class table
# ---------------------------------------------------------------------------

class ResolutionError(Exception):
    """Method lookup failed; carries the chain of classes searched."""

    def __init__(self, class_name: str, method_name: str, chain: list[str]):
        super().__init__(
            f"method '{method_name}' not found on '{class_name}' "
            f"(searched: {' -> '.join(chain)})"
        )
        self.class_name = class_name
        self.method_name = method_name
        self.chain = chain


class ClassTable:
    """Indexed access to classes, hierarchy walks, and method resolution."""

    def __init__(self, program: Program):
        self.program = program
        self.classes = {cd.name: cd for cd in program.classes}
        self._synth_ctors: dict[str, MethodDef] = {}

    def get(self, name: str) -> Optional[ClassDef]:
        return self.classes.get(name)

    def superclass_chain(self, class_name: str) -> list[ClassDef]:
        """The class itself followed by its ancestors up to the root."""
        chain = []
        cur = self.classes.get(class_name)
        while cur is not None:
            chain.append(cur)
            if cur.name == ROOT_CLASS:
                break
            cur = self.classes.get(cur.superclass)
        return chain

    def is_subclass(self, class_name: str, ancestor: str) -> bool:
        return any(cd.name == ancestor for cd in self.superclass_chain(class_name))

    def resolve_method(self, class_name: str, method_name: str) -> tuple[MethodDef, ClassDef]:
        """Nearest-ancestor resolution walking the superclass chain."""
        if class_name not in self.classes:
            raise ResolutionError(class_name, method_name, [class_name])
        chain = self.superclass_chain(class_name)
        for cd in chain:
            for md in cd.methods:
                if md.name == method_name:
                    return md, cd
        raise ResolutionError(class_name, method_name, [cd.name for cd in chain])

    def declared_fields(self, class_name: str) -> list[FieldDef]:
        """All fields visible on an instance, nearest declaration first."""
        out: list[FieldDef] = []
        seen: set[str] = set()
        for cd in self.superclass_chain(class_name):
            for fd in cd.fields:
                if fd.name not in seen:
                    seen.add(fd.name)
                    out.append(fd)
        return out

    def default_constructor(self, cd: ClassDef) -> Optional[MethodDef]:
        """The zero-argument <init>; synthesized for stub classes lacking one.

        The synthesized definition is cached so code references into it
        compare equal across machines.
        """
        for md in cd.methods:
            if md.name == "<init>" and len(md.param_types) == 0:
                return md
        if not cd.is_stub:
            return None
        if cd.name not in self._synth_ctors:
            self._synth_ctors[cd.name] = MethodDef(
                attributes=frozenset({"public"}),
                name="<init>",
                param_types=(),
                return_type="void",
                throws=(),
                limit=1,
                body=(Return(VoidLit(cd.pos), cd.pos),),
                owner=cd.name,
                pos=cd.pos,
            )
        return self._synth_ctors[cd.name]

    def is_stub_method(self, md: MethodDef) -> bool:
        cd = self.classes.get(md.owner)
        return cd is not None and cd.is_stub


def build_label_map(method: MethodDef) -> dict[str, CodeRef]:
    """Map each label to the body suffix starting at its (label ...) statement."""
    out: dict[str, CodeRef] = {}
    for i, stmt in enumerate(method.body):
        if isinstance(stmt, Label):
            out[stmt.name] = CodeRef(method, i)
    return out


def resolve_method(table: ClassTable, class_name: str, method_name: str) -> MethodDef:
    return table.resolve_method(class_name, method_name)[0]


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def print_program(program: Program) -> str:
    return "\n".join(_class_to_text(cd) for cd in program.classes) + "\n"


def _class_to_text(cd: ClassDef) -> str:
    attrs = "".join(a + " " for a in sorted(cd.attributes))
    fields = " ".join(
        f"(field {''.join(a + ' ' for a in sorted(fd.attributes))}{fd.name} {fd.type})"
        for fd in cd.fields
    )
    methods = "\n   ".join(_method_to_text(md) for md in cd.methods)
    return (
        f"({attrs}class {cd.name} extends {cd.superclass}\n"
        f"  ({fields})\n"
        f"  ({methods}))"
    )


def _method_to_text(md: MethodDef) -> str:
    attrs = "".join(a + " " for a in sorted(md.attributes))
    params = " ".join(md.param_types)
    throws = " ".join(md.throws)
    body = "\n     ".join(stmt_to_text(s) for s in md.body)
    sep = "\n     " if md.body else ""
    return (
        f"(method {attrs}{md.name} ({params}) {md.return_type} "
        f"(throws{' ' if throws else ''}{throws}) (limit {md.limit}){sep}{body})"
    )


def stmt_to_text(stmt: Stmt) -> str:
    if isinstance(stmt, Label):
        return f"(label {stmt.name})"
    if isinstance(stmt, Nop):
        return "(nop)"
    if isinstance(stmt, Line):
        return f"(line {stmt.number})"
    if isinstance(stmt, Goto):
        return f"(goto {stmt.label})"
    if isinstance(stmt, If):
        return f"(if {aexp_to_text(stmt.guard)} (goto {stmt.label}))"
    if isinstance(stmt, Assign):
        rhs = (
            f"(new {stmt.expr.class_name})"
            if isinstance(stmt.expr, New)
            else aexp_to_text(stmt.expr)
        )
        return f"(assign {stmt.dest} {rhs})"
    if isinstance(stmt, Return):
        return f"(return {aexp_to_text(stmt.value)})"
    if isinstance(stmt, FieldPut):
        return f"(field-put {aexp_to_text(stmt.obj)} {stmt.field_name} {aexp_to_text(stmt.value)})"
    if isinstance(stmt, FieldGet):
        return f"(field-get {stmt.dest} {aexp_to_text(stmt.obj)} {stmt.field_name})"
    if isinstance(stmt, ConstString):
        escaped = stmt.literal.replace("\\", "\\\\").replace('"', '\\"')
        return f'(const-string {stmt.dest} "{escaped}")'
    if isinstance(stmt, Invoke):
        args = " ".join(aexp_to_text(a) for a in stmt.args)
        types = " ".join(stmt.types)
        return f"(invoke-{stmt.kind} {stmt.target} ({args}) ({types}))"
    raise TypeError(f"not a statement: {stmt!r}")


def aexp_to_text(ae: AExp) -> str:
    if isinstance(ae, This):
        return "this"
    if isinstance(ae, TrueLit):
        return "true"
    if isinstance(ae, FalseLit):
        return "false"
    if isinstance(ae, NullLit):
        return "null"
    if isinstance(ae, VoidLit):
        return "void"
    if isinstance(ae, Name):
        return ae.name
    if isinstance(ae, IntLit):
        return str(ae.value)
    if isinstance(ae, AtomicOp):
        return f"({ae.op} {' '.join(aexp_to_text(a) for a in ae.args)})"
    if isinstance(ae, InstanceOf):
        return f"(instance-of {aexp_to_text(ae.expr)} {ae.class_name})"
    raise TypeError(f"not an atomic expression: {ae!r}")
