"""Concrete interpreter for the same bytecode, used as a ground-truth oracle.

Runs with unbounded fresh pointers and a store mapping each address to
exactly one value (strong updates). Every allocation records the call-site
history that the abstract allocators would consult, so any concrete run can
be mapped onto the abstract state space for differential soundness checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import frontend as fe
from .domain import (
    AbstractState,
    BoolConst,
    CLASS_CLASS,
    CLASS_NAME_FIELD,
    ENTRY_FP,
    ENTRY_KA,
    FieldAddr,
    FramePointer,
    FunKont,
    HALT_KONT,
    IntConst,
    KontAddr,
    METHOD_CLASS,
    METHOD_TABLE_FIELD,
    MethodHandle,
    NULL,
    ObjectPointer,
    ObjVal,
    RegAddr,
    STRING_CLASS,
    STRING_VALUE_FIELD,
    Store,
    StrConst,
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
    SynthCode,
    THIS_REG,
    This,
    TrueLit,
    VoidLit,
    build_label_map,
)
from .machine import AnalysisEvent
from .reflection import (
    FORNAME_API,
    GETMETHOD_API,
    NEWINSTANCE_API,
    REFLECT_INVOKE_API,
)


class _Void:
    __slots__ = ()

    def __repr__(self) -> str:
        return "void"


CVOID = _Void()


class _Halt:
    __slots__ = ()

    def __repr__(self) -> str:
        return "halt"


CHALT = _Halt()


@dataclass(frozen=True)
class CFP:
    serial: int
    method: str
    history: tuple  # full, untruncated call-site history


@dataclass(frozen=True)
class COP:
    serial: int
    site: tuple
    history: tuple


@dataclass(frozen=True)
class CKA:
    serial: int
    site: tuple
    history: tuple


CFP0 = CFP(0, "<entry>", ())
CKA0 = CKA(0, (), ())


@dataclass(frozen=True)
class CObj:
    op: COP
    class_name: str


@dataclass(frozen=True)
class CFun:
    fp: CFP
    code: object
    ka: CKA


CValue = Union[int, bool, str, None, _Void, CObj, CFun, _Halt, MethodHandle]


class ConcreteError(Exception):
    """Runtime type error; halts the trace with a tagged terminal reason."""


@dataclass
class ConcreteState:
    code: object
    fp: CFP
    store: dict
    ka: CKA

    @property
    def is_final(self) -> bool:
        return self.code is HALT_CODE


@dataclass
class ConcreteTrace:
    states: list[ConcreteState]
    terminal: str  # halt | fuel | error
    error: Optional[str] = None
    events: list[tuple[int, AnalysisEvent]] = field(default_factory=list)

    @property
    def final_store(self) -> dict:
        return self.states[-1].store if self.states else {}

    def api_call_names(self) -> list[str]:
        return sorted({ev.name for _, ev in self.events if ev.kind == "api-call"})


def concrete_default(type_name: str) -> CValue:
    if type_name in ("int", "byte", "char"):
        return 0
    if type_name == "boolean":
        return False
    if type_name == "void":
        return CVOID
    return None


class ConcreteMachine:
    def __init__(self, table: ClassTable):
        self.table = table
        self._serial = 0
        self._label_maps: dict[int, dict[str, CodeRef]] = {}

    def _label_map(self, method: MethodDef) -> dict[str, CodeRef]:
        lm = self._label_maps.get(id(method))
        if lm is None:
            lm = build_label_map(method)
            self._label_maps[id(method)] = lm
        return lm

    def _fresh(self) -> int:
        self._serial += 1
        return self._serial

    # -- evaluation -----------------------------------------------------------

    def eval_atomic(self, ae: AExp, fp: CFP, store: dict) -> CValue:
        if isinstance(ae, IntLit):
            return ae.value
        if isinstance(ae, TrueLit):
            return True
        if isinstance(ae, FalseLit):
            return False
        if isinstance(ae, NullLit):
            return None
        if isinstance(ae, VoidLit):
            return CVOID
        if isinstance(ae, This):
            return self._lookup(THIS_REG, fp, store)
        if isinstance(ae, Name):
            return self._lookup(ae.name, fp, store)
        if isinstance(ae, AtomicOp):
            args = [self.eval_atomic(a, fp, store) for a in ae.args]
            return _concrete_op(ae.op, args)
        if isinstance(ae, InstanceOf):
            v = self.eval_atomic(ae.expr, fp, store)
            if v is None:
                return False
            if isinstance(v, CObj):
                return self.table.is_subclass(v.class_name, ae.class_name)
            raise ConcreteError("instance-of on a non-object value")
        raise TypeError(f"not an atomic expression: {ae!r}")

    def _lookup(self, reg: str, fp: CFP, store: dict) -> CValue:
        addr = RegAddr(fp, reg)
        if addr not in store:
            raise ConcreteError(f"read of unbound register '{reg}'")
        return store[addr]

    # -- execution ------------------------------------------------------------

    def run(
        self,
        entry: MethodDef,
        fuel: int,
        initial_store: Optional[dict] = None,
    ) -> ConcreteTrace:
        store = dict(initial_store) if initial_store else {}
        store[CKA0] = CHALT
        for i, pt in enumerate(entry.param_types):
            store[RegAddr(CFP0, fe.param_register(i))] = concrete_default(pt)
        if not entry.is_static:
            store[RegAddr(CFP0, THIS_REG)] = None
        state = ConcreteState(CodeRef(entry, 0), CFP0, store, CKA0)
        trace = ConcreteTrace([state], "halt")
        steps = 0
        while True:
            if state.is_final:
                trace.terminal = "halt"
                return trace
            if state.code.head() is None:
                trace.terminal = "error"
                trace.error = "control fell off method end"
                return trace
            if steps >= fuel:
                trace.terminal = "fuel"
                return trace
            try:
                state = self._step(state, trace)
            except ConcreteError as exc:
                trace.terminal = "error"
                trace.error = str(exc)
                return trace
            steps += 1
            trace.states.append(state)

    def _step(self, state: ConcreteState, trace: ConcreteTrace) -> ConcreteState:
        head = state.code.head()
        fp, ka = state.fp, state.ka
        store = dict(state.store)
        idx = len(trace.states) - 1

        def advanced(code=None) -> ConcreteState:
            return ConcreteState(code or state.code.tail(), fp, store, ka)

        if isinstance(head, (Label, Nop, Line)):
            return advanced()

        if isinstance(head, Goto):
            return advanced(self._label_map(state.code.enclosing_method())[head.label])

        if isinstance(head, If):
            guard = self.eval_atomic(head.guard, fp, store)
            if not isinstance(guard, bool):
                raise ConcreteError("branch on a non-boolean value")
            if guard:
                return advanced(
                    self._label_map(state.code.enclosing_method())[head.label]
                )
            return advanced()

        if isinstance(head, Assign):
            if isinstance(head.expr, New):
                obj = self._allocate(head.expr.class_name, state, store, trace, idx)
                store[RegAddr(fp, head.dest)] = obj
            else:
                store[RegAddr(fp, head.dest)] = self.eval_atomic(head.expr, fp, store)
            return advanced()

        if isinstance(head, ConstString):
            op = COP(self._fresh(), state.code.site(), fp.history)
            store[FieldAddr(op, STRING_VALUE_FIELD)] = head.literal
            store[RegAddr(fp, head.dest)] = CObj(op, STRING_CLASS)
            return advanced()

        if isinstance(head, FieldGet):
            obj = self.eval_atomic(head.obj, fp, store)
            if not isinstance(obj, CObj):
                raise ConcreteError(f"field '{head.field_name}' read on a non-object")
            addr = FieldAddr(obj.op, head.field_name)
            if addr not in store:
                raise ConcreteError(f"read of unbound field '{head.field_name}'")
            store[RegAddr(fp, head.dest)] = store[addr]
            return advanced()

        if isinstance(head, FieldPut):
            obj = self.eval_atomic(head.obj, fp, store)
            if not isinstance(obj, CObj):
                raise ConcreteError(f"field '{head.field_name}' write on a non-object")
            store[FieldAddr(obj.op, head.field_name)] = self.eval_atomic(
                head.value, fp, store
            )
            return advanced()

        if isinstance(head, Return):
            rv = self.eval_atomic(head.value, fp, store)
            kont = store.get(ka)
            if kont is None:
                raise ConcreteError("return with no continuation")
            if kont is CHALT:
                store[RegAddr(fp, RET_REG)] = rv
                return ConcreteState(HALT_CODE, fp, store, ka)
            store[RegAddr(kont.fp, RET_REG)] = rv
            return ConcreteState(kont.code, kont.fp, store, kont.ka)

        if isinstance(head, Invoke):
            return self._invoke(state, head, store, trace, idx)

        raise TypeError(f"unsteppable statement: {head!r}")

    def _allocate(
        self, class_name: str, state: ConcreteState, store: dict, trace, idx
    ) -> CObj:
        op = COP(self._fresh(), state.code.site(), state.fp.history)
        for fd in self.table.declared_fields(class_name):
            store[FieldAddr(op, fd.name)] = concrete_default(fd.type)
        return CObj(op, class_name)

    def _invoke(
        self, state: ConcreteState, stmt: Invoke, store: dict, trace, idx
    ) -> ConcreteState:
        fp = state.fp

        if stmt.kind == "static" and stmt.target == FORNAME_API and len(stmt.args) == 1:
            arg = self.eval_atomic(stmt.args[0], fp, store)
            if not (isinstance(arg, CObj) and arg.class_name == STRING_CLASS):
                raise ConcreteError("forName argument is not a string object")
            op = COP(self._fresh(), state.code.site(), fp.history)
            store[FieldAddr(op, CLASS_NAME_FIELD)] = arg
            store[RegAddr(fp, RET_REG)] = CObj(op, CLASS_CLASS)
            return ConcreteState(state.code.tail(), fp, store, state.ka)

        if stmt.kind == "virtual" and stmt.target == GETMETHOD_API and len(stmt.args) == 3:
            cn = self._class_name_through(stmt.args[0], fp, store)
            name_obj = self.eval_atomic(stmt.args[1], fp, store)
            if not (isinstance(name_obj, CObj) and name_obj.class_name == STRING_CLASS):
                raise ConcreteError("getMethod name is not a string object")
            mn = store.get(FieldAddr(name_obj.op, STRING_VALUE_FIELD))
            if not isinstance(mn, str):
                raise ConcreteError("getMethod name has no string value")
            try:
                m, _ = self.table.resolve_method(cn, mn)
            except ResolutionError as exc:
                raise ConcreteError(str(exc))
            if "public" not in m.attributes:
                raise ConcreteError(f"method {m.qualified_name} is not public")
            op = COP(self._fresh(), state.code.site(), fp.history)
            store[FieldAddr(op, METHOD_TABLE_FIELD)] = MethodHandle(m)
            store[RegAddr(fp, RET_REG)] = CObj(op, METHOD_CLASS)
            return ConcreteState(state.code.tail(), fp, store, state.ka)

        if stmt.kind == "virtual" and stmt.target == NEWINSTANCE_API and len(stmt.args) == 1:
            cn = self._class_name_through(stmt.args[0], fp, store)
            cd = self.table.get(cn)
            if cd is None:
                raise ConcreteError(f"newInstance of unknown class '{cn}'")
            if "abstract" in cd.attributes:
                raise ConcreteError(f"newInstance of abstract class '{cn}'")
            ctor = self.table.default_constructor(cd)
            if ctor is None:
                raise ConcreteError(f"class '{cn}' has no default constructor")
            obj = self._allocate(cn, state, store, trace, idx)
            store[RegAddr(fp, RET_REG)] = obj
            if isinstance(stmt.args[0], Name):
                store[RegAddr(fp, stmt.args[0].name)] = obj
            synth = Invoke(
                kind="direct",
                target=f"{cn}/<init>",
                args=(Name(RET_REG, stmt.pos),),
                types=(),
                pos=stmt.pos,
            )
            return ConcreteState(
                SynthCode(synth, state.code.tail()), fp, store, state.ka
            )

        if stmt.kind == "virtual" and stmt.target == REFLECT_INVOKE_API and len(stmt.args) == 3:
            mobj = self.eval_atomic(stmt.args[0], fp, store)
            if not (isinstance(mobj, CObj) and mobj.class_name == METHOD_CLASS):
                raise ConcreteError("reflective invoke on a non-method object")
            handle = store.get(FieldAddr(mobj.op, METHOD_TABLE_FIELD))
            if not isinstance(handle, MethodHandle):
                raise ConcreteError("method object resolves no methods")
            m = handle.method
            arg_vals = [concrete_default(pt) for pt in m.param_types]
            if m.is_static:
                return self._apply(m, None, arg_vals, state, store, trace, idx)
            recv = self.eval_atomic(stmt.args[1], fp, store)
            if not isinstance(recv, CObj):
                raise ConcreteError(
                    f"no receiver object for reflective call to {m.qualified_name}"
                )
            return self._apply(m, recv, arg_vals, state, store, trace, idx)

        mname = stmt.method_name
        if stmt.kind == "static":
            try:
                m, _ = self.table.resolve_method(stmt.target_class, mname)
            except ResolutionError as exc:
                raise ConcreteError(str(exc))
            if len(stmt.args) != len(m.param_types):
                raise ConcreteError(f"arity mismatch calling {m.qualified_name}")
            arg_vals = [self.eval_atomic(a, fp, store) for a in stmt.args]
            return self._apply(m, None, arg_vals, state, store, trace, idx)

        if not stmt.args:
            raise ConcreteError(f"missing receiver for {stmt.target}")
        recv = self.eval_atomic(stmt.args[0], fp, store)
        if not isinstance(recv, CObj):
            raise ConcreteError(f"non-object receiver for {stmt.target}")
        if stmt.kind in ("virtual", "interface"):
            start_class = recv.class_name
        elif stmt.kind == "direct":
            start_class = stmt.target_class
        else:  # super
            owner = state.code.enclosing_method().owner
            cd = self.table.get(owner)
            start_class = cd.superclass if cd is not None else stmt.target_class
        try:
            m, _ = self.table.resolve_method(start_class, mname)
        except ResolutionError as exc:
            raise ConcreteError(str(exc))
        rest = stmt.args[1:]
        if len(rest) != len(m.param_types):
            raise ConcreteError(f"arity mismatch calling {m.qualified_name}")
        arg_vals = [self.eval_atomic(a, fp, store) for a in rest]
        return self._apply(m, recv, arg_vals, state, store, trace, idx)

    def _apply(
        self,
        m: MethodDef,
        this_val: Optional[CObj],
        arg_vals: list,
        state: ConcreteState,
        store: dict,
        trace: ConcreteTrace,
        idx: int,
    ) -> ConcreteState:
        site = state.code.site()
        fp2 = CFP(self._fresh(), m.qualified_name, state.fp.history + (site,))
        ka2 = CKA(self._fresh(), site, state.fp.history + (site,))
        store[ka2] = CFun(state.fp, state.code.tail(), state.ka)
        if this_val is not None:
            store[RegAddr(fp2, THIS_REG)] = this_val
        for i, av in enumerate(arg_vals):
            store[RegAddr(fp2, fe.param_register(i))] = av
        trace.events.append(
            (idx, AnalysisEvent("method-resolved", m.qualified_name, site=site))
        )
        if self.table.is_stub_method(m):
            trace.events.append(
                (idx, AnalysisEvent("api-call", m.qualified_name, site=site))
            )
        return ConcreteState(CodeRef(m, 0), fp2, store, ka2)

    def _class_name_through(self, ae: AExp, fp: CFP, store: dict) -> str:
        obj = self.eval_atomic(ae, fp, store)
        if not (isinstance(obj, CObj) and obj.class_name == CLASS_CLASS):
            raise ConcreteError("receiver is not a class object")
        ref = store.get(FieldAddr(obj.op, CLASS_NAME_FIELD))
        if not (isinstance(ref, CObj) and ref.class_name == STRING_CLASS):
            raise ConcreteError("class object has no string-valued class name")
        value = store.get(FieldAddr(ref.op, STRING_VALUE_FIELD))
        if not isinstance(value, str):
            raise ConcreteError("class name string has no value")
        return value.replace(".", "/")


def run_concrete(
    table: ClassTable,
    entry: MethodDef,
    fuel: int = 500,
    initial_store: Optional[dict] = None,
) -> ConcreteTrace:
    return ConcreteMachine(table).run(entry, fuel, initial_store)


def _concrete_op(op: str, args: list) -> CValue:
    if op == "not":
        (a,) = args
        if not isinstance(a, bool):
            raise ConcreteError("'not' on a non-boolean")
        return not a

    a, b = args
    if op in ("add", "sub", "mul", "div", "lt", "gt"):
        if isinstance(a, bool) or isinstance(b, bool):
            raise ConcreteError(f"'{op}' on boolean operands")
        if not (isinstance(a, int) and isinstance(b, int)):
            raise ConcreteError(f"'{op}' on non-integer operands")
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            if b == 0:
                raise ConcreteError("division by zero")
            q = abs(a) // abs(b)
            return q if (a >= 0) == (b >= 0) else -q
        if op == "lt":
            return a < b
        return a > b
    if op == "eq":
        if isinstance(a, bool) and isinstance(b, bool):
            return a == b
        if isinstance(a, bool) or isinstance(b, bool):
            raise ConcreteError("'eq' on mixed boolean/non-boolean operands")
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        if isinstance(a, str) and isinstance(b, str):
            return a == b
        if (a is None or isinstance(a, CObj)) and (b is None or isinstance(b, CObj)):
            return a == b
        raise ConcreteError("'eq' on incomparable operands")
    if op in ("and", "or"):
        if not (isinstance(a, bool) and isinstance(b, bool)):
            raise ConcreteError(f"'{op}' on non-boolean operands")
        return (a and b) if op == "and" else (a or b)
    raise ValueError(f"unknown operator '{op}'")


# ---------------------------------------------------------------------------
# Abstraction mapping for differential soundness checks
# ---------------------------------------------------------------------------

def abstract_fp(cfp: CFP, k: int) -> FramePointer:
    if cfp == CFP0:
        return ENTRY_FP
    return FramePointer(cfp.method, truncate_context(cfp.history, k))


def abstract_op(cop: COP, k: int) -> ObjectPointer:
    return ObjectPointer(cop.site, truncate_context(cop.history, k))


def abstract_ka(cka: CKA, k: int) -> KontAddr:
    if cka == CKA0:
        return ENTRY_KA
    return KontAddr(cka.site, truncate_context(cka.history, k))


def abstract_addr(caddr, k: int):
    if isinstance(caddr, RegAddr):
        return RegAddr(abstract_fp(caddr.fp, k), caddr.reg)
    if isinstance(caddr, FieldAddr):
        return FieldAddr(abstract_op(caddr.op, k), caddr.field)
    if isinstance(caddr, CKA):
        return abstract_ka(caddr, k)
    raise TypeError(f"not a concrete address: {caddr!r}")


def abstract_atom(cval: CValue, k: int):
    if isinstance(cval, bool):
        return BoolConst(cval)
    if isinstance(cval, int):
        return IntConst(cval)
    if isinstance(cval, str):
        return StrConst(cval)
    if cval is None:
        return NULL
    if cval is CVOID:
        return VOID
    if isinstance(cval, CObj):
        return ObjVal(abstract_op(cval.op, k), cval.class_name)
    if isinstance(cval, CFun):
        return FunKont(abstract_fp(cval.fp, k), cval.code, abstract_ka(cval.ka, k))
    if cval is CHALT:
        return HALT_KONT
    if isinstance(cval, MethodHandle):
        return cval
    raise TypeError(f"not a concrete value: {cval!r}")


def abstracts(
    abs_state: AbstractState,
    conc_state: ConcreteState,
    k: int,
    abs_store: Optional[Store] = None,
) -> bool:
    """True when the abstract state covers the concrete one: equal code,
    corresponding pointers, and every concrete binding's abstraction below
    the abstract store's image at the mapped address."""
    store = abs_store if abs_store is not None else abs_state.store
    if store is None:
        raise ValueError("abstract state has no store; pass the shared one")
    if abs_state.code != conc_state.code:
        return False
    if abs_state.fp != abstract_fp(conc_state.fp, k):
        return False
    if abs_state.ka != abstract_ka(conc_state.ka, k):
        return False
    for caddr, cval in conc_state.store.items():
        aaddr = abstract_addr(caddr, k)
        if not Value([abstract_atom(cval, k)]).leq(store.get(aaddr)):
            return False
    return True


def concrete_gc(state: ConcreteState) -> ConcreteState:
    """Restrict the store to addresses reachable from the state's frame and
    continuation, mirroring the abstract collector."""
    store = state.store
    roots = [addr for addr in store if isinstance(addr, RegAddr) and addr.fp == state.fp]
    roots.append(state.ka)
    reached: set = set()
    work = [a for a in roots if a in store]
    while work:
        addr = work.pop()
        if addr in reached:
            continue
        reached.add(addr)
        val = store.get(addr)
        if isinstance(val, CObj):
            for a in store:
                if isinstance(a, FieldAddr) and a.op == val.op and a not in reached:
                    work.append(a)
        elif isinstance(val, CFun):
            for a in store:
                if isinstance(a, RegAddr) and a.fp == val.fp and a not in reached:
                    work.append(a)
            if val.ka in store and val.ka not in reached:
                work.append(val.ka)
    return ConcreteState(
        state.code,
        state.fp,
        {a: v for a, v in store.items() if a in reached},
        state.ka,
    )
