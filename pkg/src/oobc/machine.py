"""The abstract machine: a one-step transition function over machine states.

`Machine.step` dispatches on the head statement and returns every successor
state together with the analysis events observed along the way (API calls,
resolutions, allocations, diagnostics). All updates into the store are
joins; one abstract address may stand for many run-time locations, so
nothing is ever overwritten.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe
from .domain import (
    BOOL_TOP,
    BoolConst,
    EMPTY_VALUE,
    ENTRY_FP,
    ENTRY_KA,
    FALSE,
    FieldAddr,
    FramePointer,
    FunKont,
    HALT_KONT,
    INT_TOP,
    IntConst,
    KontAddr,
    MethodHandle,
    NULL,
    ObjectPointer,
    ObjVal,
    RegAddr,
    STR_TOP,
    AbstractState,
    Store,
    StrConst,
    TRUE,
    Value,
    VOID,
    truncate_context,
)
from .frontend import (
    AExp,
    Assign,
    AtomicOp,
    ClassTable,
    CodeRef,
    ConstString,
    FalseLit,
    FieldGet,
    FieldPut,
    Goto,
    HALT_CODE,
    If,
    InstanceOf,
    IntLit,
    Invoke,
    Label,
    Line,
    MethodDef,
    Name,
    New,
    Nop,
    NullLit,
    RET_REG,
    ResolutionError,
    Return,
    THIS_REG,
    This,
    TrueLit,
    VoidLit,
    build_label_map,
)


@dataclass(frozen=True)
class AllocationPolicy:
    """Context depth for the allocators; k = 0 is the monovariant mode."""

    k: int = 0

    @property
    def mode(self) -> str:
        return "monovariant" if self.k == 0 else "context-sensitive"


@dataclass(frozen=True)
class AnalysisEvent:
    kind: str  # api-call | method-resolved | allocation | diagnostic
    name: str = ""
    message: str = ""
    site: tuple = ()


@dataclass
class StepResult:
    """Successor states tagged with the rule that produced them, plus events."""

    transitions: list[tuple[str, AbstractState]] = field(default_factory=list)
    events: list[AnalysisEvent] = field(default_factory=list)

    @property
    def successors(self) -> list[AbstractState]:
        return [s for _, s in self.transitions]

    def add(self, tag: str, state: AbstractState) -> None:
        self.transitions.append((tag, state))

    def event(self, kind: str, name: str = "", message: str = "", site: tuple = ()) -> None:
        self.events.append(AnalysisEvent(kind, name, message, site))

    def diagnostic(self, message: str, site: tuple = (), name: str = "") -> None:
        self.events.append(AnalysisEvent("diagnostic", name, message, site))


def default_value(type_name: str) -> Value:
    """Initial field/parameter value for a declared type."""
    if type_name in ("int", "byte", "char"):
        return Value([IntConst(0)])
    if type_name == "boolean":
        return Value([FALSE])
    if type_name == "void":
        return Value([VOID])
    return Value([NULL])


def top_value(type_name: str) -> Value:
    """Unknown value of a declared type (class types degrade to null)."""
    if type_name in ("int", "byte", "char"):
        return Value([INT_TOP])
    if type_name == "boolean":
        return Value([BOOL_TOP])
    if type_name == "void":
        return Value([VOID])
    return Value([NULL])


class Machine:
    def __init__(self, table: ClassTable, policy: AllocationPolicy):
        self.table = table
        self.policy = policy
        self._label_maps: dict[int, dict[str, CodeRef]] = {}
        from . import reflection  # deferred: reflection imports this module

        self._reflection = reflection

    # -- helpers ------------------------------------------------------------

    def label_map(self, method: MethodDef) -> dict[str, CodeRef]:
        lm = self._label_maps.get(id(method))
        if lm is None:
            lm = build_label_map(method)
            self._label_maps[id(method)] = lm
        return lm

    def inject(self, entry: MethodDef) -> AbstractState:
        """Initial state for an entry method: its body, the distinguished
        entry frame, and a store holding only the halt continuation."""
        store = Store({ENTRY_KA: Value([HALT_KONT])})
        return AbstractState(CodeRef(entry, 0), ENTRY_FP, store, ENTRY_KA)

    def seed_entry_frame(self, entry: MethodDef, store: Store) -> Store:
        """Bind entry parameters to their type defaults; `this` is unknown
        at an entry and is seeded null."""
        for i, pt in enumerate(entry.param_types):
            store = store.joined(
                RegAddr(ENTRY_FP, fe.param_register(i)), default_value(pt)
            )
        if not entry.is_static:
            store = store.joined(RegAddr(ENTRY_FP, THIS_REG), Value([NULL]))
        return store

    # -- allocators ----------------------------------------------------------

    def alloc_fp(self, state: AbstractState, callee: MethodDef) -> FramePointer:
        ctx = truncate_context(state.fp.context + (state.code.site(),), self.policy.k)
        return FramePointer(callee.qualified_name, ctx)

    def alloc_k(self, state: AbstractState) -> KontAddr:
        site = state.code.site()
        ctx = truncate_context(state.fp.context + (site,), self.policy.k)
        return KontAddr(site, ctx)

    def alloc_op(self, state: AbstractState) -> ObjectPointer:
        return ObjectPointer(state.code.site(), state.fp.context)

    # -- atomic evaluation ----------------------------------------------------

    def eval_atomic(
        self,
        ae: AExp,
        fp: FramePointer,
        store: Store,
        events: Optional[list[AnalysisEvent]] = None,
    ) -> Value:
        if isinstance(ae, IntLit):
            return Value([IntConst(ae.value)])
        if isinstance(ae, TrueLit):
            return Value([TRUE])
        if isinstance(ae, FalseLit):
            return Value([FALSE])
        if isinstance(ae, NullLit):
            return Value([NULL])
        if isinstance(ae, VoidLit):
            return Value([VOID])
        if isinstance(ae, This):
            return self._lookup(THIS_REG, fp, store, events)
        if isinstance(ae, Name):
            return self._lookup(ae.name, fp, store, events)
        if isinstance(ae, AtomicOp):
            args = [self.eval_atomic(a, fp, store, events) for a in ae.args]
            return _apply_op(ae.op, args)
        if isinstance(ae, InstanceOf):
            val = self.eval_atomic(ae.expr, fp, store, events)
            return self._instance_of(val, ae.class_name)
        raise TypeError(f"not an atomic expression: {ae!r}")

    def _lookup(
        self,
        reg: str,
        fp: FramePointer,
        store: Store,
        events: Optional[list[AnalysisEvent]],
    ) -> Value:
        addr = RegAddr(fp, reg)
        if addr not in store:
            if events is not None:
                events.append(
                    AnalysisEvent("diagnostic", reg, f"read of unbound register '{reg}'")
                )
            return EMPTY_VALUE
        return store.get(addr)

    def _instance_of(self, val: Value, class_name: str) -> Value:
        votes: set[bool] = set()
        for atom in val:
            if isinstance(atom, ObjVal):
                votes.add(self.table.is_subclass(atom.class_name, class_name))
            elif atom is NULL:
                votes.add(False)
        if not votes:
            return EMPTY_VALUE
        return Value([BoolConst(v) for v in votes])

    def eval_field(
        self,
        ae_obj: AExp,
        fp: FramePointer,
        store: Store,
        field_name: str,
        events: Optional[list[AnalysisEvent]] = None,
    ) -> Value:
        base = self.eval_atomic(ae_obj, fp, store, events)
        objs = base.objects()
        if events is not None:
            skipped = len(base) - len(objs)
            if not objs:
                events.append(
                    AnalysisEvent(
                        "diagnostic", field_name,
                        f"field '{field_name}' read finds no object values",
                    )
                )
            elif skipped:
                events.append(
                    AnalysisEvent(
                        "diagnostic", field_name,
                        f"skipped {skipped} non-object value(s) reading field '{field_name}'",
                    )
                )
        out = EMPTY_VALUE
        for obj in objs:
            out = out.join(store.get(FieldAddr(obj.op, field_name)))
        return out

    def init_object(self, store: Store, op: ObjectPointer, class_name: str) -> Store:
        """Seed every declared field, walking the whole superclass chain."""
        for fd in self.table.declared_fields(class_name):
            store = store.joined(FieldAddr(op, fd.name), default_value(fd.type))
        return store

    # -- transition ------------------------------------------------------------

    def step(self, state: AbstractState) -> StepResult:
        res = StepResult()
        head = state.code.head()
        if head is None:
            if not state.is_final:
                res.diagnostic("control fell off method end", state.code.site())
            return res

        store = state.store
        fp = state.fp
        site = state.code.site()

        if isinstance(head, (Label, Nop, Line)):
            res.add("step", state.advanced())
            return res

        if isinstance(head, Goto):
            target = self.label_map(state.code.enclosing_method())[head.label]
            res.add("goto", AbstractState(target, fp, store, state.ka))
            return res

        if isinstance(head, If):
            guard = self.eval_atomic(head.guard, fp, store, res.events)
            has_true = TRUE in guard or BOOL_TOP in guard
            has_false = FALSE in guard or BOOL_TOP in guard
            if not has_true and not has_false:
                # empty or non-boolean guard: explore both branches
                has_true = has_false = True
            if has_true:
                target = self.label_map(state.code.enclosing_method())[head.label]
                res.add("if-true", AbstractState(target, fp, store, state.ka))
            if has_false:
                res.add("if-false", state.advanced())
            return res

        if isinstance(head, Assign):
            if isinstance(head.expr, New):
                op = self.alloc_op(state)
                class_name = head.expr.class_name
                store2 = store.joined(
                    RegAddr(fp, head.dest), Value([ObjVal(op, class_name)])
                )
                store3 = self.init_object(store2, op, class_name)
                res.event("allocation", class_name, site=site)
                res.add("new", AbstractState(state.code.tail(), fp, store3, state.ka))
            else:
                val = self.eval_atomic(head.expr, fp, store, res.events)
                store2 = store.joined(RegAddr(fp, head.dest), val)
                res.add("assign", AbstractState(state.code.tail(), fp, store2, state.ka))
            return res

        if isinstance(head, ConstString):
            return self._reflection.step_const_string(self, state, head)

        if isinstance(head, FieldGet):
            val = self.eval_field(head.obj, fp, store, head.field_name, res.events)
            store2 = store.joined(RegAddr(fp, head.dest), val)
            res.add("field-get", AbstractState(state.code.tail(), fp, store2, state.ka))
            return res

        if isinstance(head, FieldPut):
            base = self.eval_atomic(head.obj, fp, store, res.events)
            objs = base.objects()
            if not objs:
                res.diagnostic(
                    f"field '{head.field_name}' write finds no object values", site
                )
            val = self.eval_atomic(head.value, fp, store, res.events)
            store2 = store
            for obj in objs:
                store2 = store2.joined(FieldAddr(obj.op, head.field_name), val)
            res.add("field-put", AbstractState(state.code.tail(), fp, store2, state.ka))
            return res

        if isinstance(head, Return):
            rv = self.eval_atomic(head.value, fp, store, res.events)
            konts = store.get(state.ka).konts()
            if not konts:
                res.diagnostic("return with empty continuation set", site)
                return res
            for kont in konts:
                if kont is HALT_KONT:
                    store2 = store.joined(RegAddr(fp, RET_REG), rv)
                    res.add("halt", AbstractState(HALT_CODE, fp, store2, state.ka))
                else:
                    store2 = store.joined(RegAddr(kont.fp, RET_REG), rv)
                    res.add(
                        "return", AbstractState(kont.code, kont.fp, store2, kont.ka)
                    )
            return res

        if isinstance(head, Invoke):
            handled = self._reflection.intercept_invoke(self, state, head)
            if handled is not None:
                return handled
            self._generic_invoke(state, head, res)
            return res

        raise TypeError(f"unsteppable statement: {head!r}")

    # -- invocation -------------------------------------------------------------

    def _generic_invoke(self, state: AbstractState, stmt: Invoke, res: StepResult) -> None:
        fp, store, site = state.fp, state.store, state.code.site()
        mname = stmt.method_name

        if stmt.kind == "static":
            try:
                m, _ = self.table.resolve_method(stmt.target_class, mname)
            except ResolutionError as exc:
                res.diagnostic(str(exc), site, stmt.target)
                return
            if len(stmt.args) != len(m.param_types):
                res.diagnostic(
                    f"arity mismatch calling {m.qualified_name}", site, m.qualified_name
                )
                return
            arg_vals = [self.eval_atomic(a, fp, store, res.events) for a in stmt.args]
            self.apply_method(m, None, arg_vals, state, res, tag="invoke")
            return

        if not stmt.args:
            res.diagnostic(f"missing receiver for {stmt.target}", site, stmt.target)
            return
        recv = self.eval_atomic(stmt.args[0], fp, store, res.events)
        objs = recv.objects()
        if not objs:
            res.diagnostic(
                f"no object receivers for {stmt.target}", site, stmt.target
            )
            return
        rest_vals = [self.eval_atomic(a, fp, store, res.events) for a in stmt.args[1:]]

        if stmt.kind in ("virtual", "interface"):
            groups: dict[str, tuple[MethodDef, list[ObjVal]]] = {}
            for obj in objs:
                try:
                    m, _ = self.table.resolve_method(obj.class_name, mname)
                except ResolutionError as exc:
                    res.diagnostic(str(exc), site, stmt.target)
                    continue
                entry = groups.setdefault(m.qualified_name, (m, []))
                entry[1].append(obj)
            for qual in sorted(groups):
                m, receivers = groups[qual]
                self._apply_checked(m, Value(receivers), rest_vals, state, res)
            return

        if stmt.kind == "direct":
            start_class = stmt.target_class
        else:  # super: resolution starts at the enclosing class's superclass
            owner = state.code.enclosing_method().owner
            cd = self.table.get(owner)
            start_class = cd.superclass if cd is not None else stmt.target_class
        try:
            m, _ = self.table.resolve_method(start_class, mname)
        except ResolutionError as exc:
            res.diagnostic(str(exc), site, stmt.target)
            return
        self._apply_checked(m, Value(objs), rest_vals, state, res)

    def _apply_checked(
        self,
        m: MethodDef,
        this_vals: Value,
        arg_vals: list[Value],
        state: AbstractState,
        res: StepResult,
    ) -> None:
        if len(arg_vals) != len(m.param_types):
            res.diagnostic(
                f"arity mismatch calling {m.qualified_name}",
                state.code.site(),
                m.qualified_name,
            )
            return
        self.apply_method(m, this_vals, arg_vals, state, res, tag="invoke")

    def apply_method(
        self,
        m: MethodDef,
        this_vals: Optional[Value],
        arg_vals: list[Value],
        state: AbstractState,
        res: StepResult,
        tag: str = "invoke",
    ) -> None:
        """Push a continuation for the caller and enter the method body."""
        site = state.code.site()
        fp2 = self.alloc_fp(state, m)
        ka2 = self.alloc_k(state)
        store = state.store.joined(
            ka2, Value([FunKont(state.fp, state.code.tail(), state.ka)])
        )
        if this_vals is not None:
            store = store.joined(RegAddr(fp2, THIS_REG), this_vals)
        for i, av in enumerate(arg_vals):
            store = store.joined(RegAddr(fp2, fe.param_register(i)), av)
        res.event("method-resolved", m.qualified_name, site=site)
        if self.table.is_stub_method(m):
            res.event("api-call", m.qualified_name, site=site)
        res.add(tag, AbstractState(CodeRef(m, 0), fp2, store, ka2))

    # -- predicate support --------------------------------------------------------

    def peek_targets(self, state: AbstractState, store: Store) -> tuple[Optional[str], list[str], list[str]]:
        """Resolution view of an invoke head against the given store:
        (written target, resolved qualified names, API call names)."""
        head = state.code.head()
        if not isinstance(head, Invoke):
            return None, [], []
        resolved: set[str] = set()
        apis: set[str] = set()

        def note(m: MethodDef) -> None:
            resolved.add(m.qualified_name)
            if self.table.is_stub_method(m):
                apis.add(m.qualified_name)

        mname = head.method_name
        if self._reflection.is_reflect_invoke(head):
            for obj in self.eval_atomic(head.args[0], state.fp, store).objects():
                if obj.class_name == self._reflection.METHOD_OBJECT_CLASS:
                    table_val = store.get(FieldAddr(obj.op, "methods"))
                    for handle in table_val.method_handles():
                        note(handle.method)
        elif head.kind == "static":
            try:
                note(self.table.resolve_method(head.target_class, mname)[0])
            except ResolutionError:
                pass
        elif head.kind == "direct":
            try:
                note(self.table.resolve_method(head.target_class, mname)[0])
            except ResolutionError:
                pass
        elif head.kind == "super":
            method = state.code.enclosing_method()
            cd = self.table.get(method.owner) if method else None
            if cd is not None:
                try:
                    note(self.table.resolve_method(cd.superclass, mname)[0])
                except ResolutionError:
                    pass
        else:  # virtual / interface
            if head.args:
                for obj in self.eval_atomic(head.args[0], state.fp, store).objects():
                    try:
                        note(self.table.resolve_method(obj.class_name, mname)[0])
                    except ResolutionError:
                        pass
        return head.target, sorted(resolved), sorted(apis)


# ---------------------------------------------------------------------------
# Atomic operator evaluation
# ---------------------------------------------------------------------------

def _apply_op(op: str, args: list[Value]) -> Value:
    atoms: list = []
    if op == "not":
        for a in args[0]:
            if isinstance(a, BoolConst):
                atoms.append(BoolConst(not a.value))
            elif a is BOOL_TOP:
                atoms.append(BOOL_TOP)
        return Value(atoms)
    lhs, rhs = args
    for a in lhs:
        for b in rhs:
            r = _apply_pair(op, a, b)
            if r is not None:
                atoms.append(r)
    return Value(atoms)


def _is_int(a) -> bool:
    return isinstance(a, IntConst) or a is INT_TOP


def _apply_pair(op: str, a, b):
    if op in ("add", "sub", "mul", "div"):
        if not (_is_int(a) and _is_int(b)):
            return None
        if op == "div" and isinstance(b, IntConst) and b.value == 0:
            return None  # the only concrete outcome is an error halt
        if isinstance(a, IntConst) and isinstance(b, IntConst):
            x, y = a.value, b.value
            if op == "add":
                return IntConst(x + y)
            if op == "sub":
                return IntConst(x - y)
            if op == "mul":
                return IntConst(x * y)
            q = abs(x) // abs(y)  # truncating division
            return IntConst(q if (x >= 0) == (y >= 0) else -q)
        return INT_TOP
    if op in ("lt", "gt"):
        if not (_is_int(a) and _is_int(b)):
            return None
        if isinstance(a, IntConst) and isinstance(b, IntConst):
            return BoolConst(a.value < b.value if op == "lt" else a.value > b.value)
        return BOOL_TOP
    if op == "eq":
        return _eq_pair(a, b)
    if op in ("and", "or"):
        return _logic_pair(op, a, b)
    raise ValueError(f"unknown operator '{op}'")


def _eq_pair(a, b):
    if _is_int(a) and _is_int(b):
        if isinstance(a, IntConst) and isinstance(b, IntConst):
            return BoolConst(a.value == b.value)
        return BOOL_TOP
    bool_a = isinstance(a, BoolConst) or a is BOOL_TOP
    bool_b = isinstance(b, BoolConst) or b is BOOL_TOP
    if bool_a and bool_b:
        if isinstance(a, BoolConst) and isinstance(b, BoolConst):
            return BoolConst(a.value == b.value)
        return BOOL_TOP
    str_a = isinstance(a, StrConst) or a is STR_TOP
    str_b = isinstance(b, StrConst) or b is STR_TOP
    if str_a and str_b:
        if isinstance(a, StrConst) and isinstance(b, StrConst):
            return BoolConst(a.value == b.value)
        return BOOL_TOP
    if a is NULL and b is NULL:
        return TRUE
    if (a is NULL and isinstance(b, ObjVal)) or (isinstance(a, ObjVal) and b is NULL):
        return FALSE
    if isinstance(a, ObjVal) and isinstance(b, ObjVal):
        # one abstract pointer covers many concrete objects, so equality of
        # pointers only says "maybe"
        return BOOL_TOP if a == b else FALSE
    return None


def _logic_pair(op: str, a, b):
    bool_a = isinstance(a, BoolConst) or a is BOOL_TOP
    bool_b = isinstance(b, BoolConst) or b is BOOL_TOP
    if not (bool_a and bool_b):
        return None
    if op == "and":
        if (isinstance(a, BoolConst) and not a.value) or (
            isinstance(b, BoolConst) and not b.value
        ):
            return FALSE
        if isinstance(a, BoolConst) and isinstance(b, BoolConst):
            return BoolConst(a.value and b.value)
        return BOOL_TOP
    if (isinstance(a, BoolConst) and a.value) or (
        isinstance(b, BoolConst) and b.value
    ):
        return TRUE
    if isinstance(a, BoolConst) and isinstance(b, BoolConst):
        return BoolConst(a.value or b.value)
    return BOOL_TOP
