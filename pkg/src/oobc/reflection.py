"""Interceptors for string constants and the reflective class/method APIs.

Four distinguished invoke targets are special-cased before generic
dispatch: class lookup from a string, method lookup on a class object,
instantiation through a class object, and invocation through a method
object. String constants allocate string objects whose `value` field holds
the abstracted literal, so the class and method names consumed by the
reflective APIs flow through the store like any other data.
"""

from __future__ import annotations

from typing import Optional

from .domain import (
    AbstractState,
    CLASS_CLASS,
    CLASS_NAME_FIELD,
    FieldAddr,
    METHOD_CLASS,
    METHOD_TABLE_FIELD,
    MethodHandle,
    ObjVal,
    RegAddr,
    STRING_CLASS,
    STRING_VALUE_FIELD,
    STR_TOP,
    StrConst,
    Value,
)
from .frontend import (
    ConstString,
    Invoke,
    MethodDef,
    Name,
    RET_REG,
    ResolutionError,
    SynthCode,
)

FORNAME_API = "java/lang/Class/forName"
GETMETHOD_API = "java/lang/Class/getMethod"
NEWINSTANCE_API = "java/lang/Class/newInstance"
REFLECT_INVOKE_API = "java/lang/reflect/Method/invoke"

METHOD_OBJECT_CLASS = METHOD_CLASS


def is_reflect_invoke(stmt: Invoke) -> bool:
    return stmt.kind == "virtual" and stmt.target == REFLECT_INVOKE_API


def intercept_invoke(machine, state: AbstractState, stmt: Invoke):
    """Returns a StepResult when the invoke names a reflective API."""
    if stmt.kind == "static" and stmt.target == FORNAME_API and len(stmt.args) == 1:
        return step_forname(machine, state, stmt)
    if stmt.kind == "virtual":
        if stmt.target == GETMETHOD_API and len(stmt.args) == 3:
            return step_getmethod(machine, state, stmt)
        if stmt.target == NEWINSTANCE_API and len(stmt.args) == 1:
            return step_newinstance(machine, state, stmt)
        if stmt.target == REFLECT_INVOKE_API and len(stmt.args) == 3:
            return step_reflect_invoke(machine, state, stmt)
    return None


def step_const_string(machine, state: AbstractState, stmt: ConstString):
    """Allocate a string object and abstract the literal into its value field."""
    from .machine import StepResult

    res = StepResult()
    op = machine.alloc_op(state)
    store = state.store.joined(
        RegAddr(state.fp, stmt.dest), Value([ObjVal(op, STRING_CLASS)])
    )
    store = store.joined(
        FieldAddr(op, STRING_VALUE_FIELD), Value([StrConst(stmt.literal)])
    )
    res.event("allocation", STRING_CLASS, site=state.code.site())
    res.add("const-string", AbstractState(state.code.tail(), state.fp, store, state.ka))
    return res


def step_forname(machine, state: AbstractState, stmt: Invoke):
    """Allocate a class object whose class-name field aliases the string
    objects named by the argument; the class object lands in `ret`."""
    from .machine import StepResult

    res = StepResult()
    site = state.code.site()
    arg = machine.eval_atomic(stmt.args[0], state.fp, state.store, res.events)
    string_objs = [o for o in arg.objects() if o.class_name == STRING_CLASS]
    store = state.store
    if string_objs:
        op_cls = machine.alloc_op(state)
        store = store.joined(
            FieldAddr(op_cls, CLASS_NAME_FIELD), Value(string_objs)
        )
        store = store.joined(
            RegAddr(state.fp, RET_REG), Value([ObjVal(op_cls, CLASS_CLASS)])
        )
        res.event("allocation", CLASS_CLASS, site=site)
    else:
        res.diagnostic("forName argument holds no string objects", site, FORNAME_API)
    res.add("forname", AbstractState(state.code.tail(), state.fp, store, state.ka))
    return res


def _class_names_of(machine, store, value: Value, res, site) -> list[str]:
    """Class names reachable through class objects: follow the class-name
    field to string objects and read their abstracted values. Dotted source
    names normalize to slash-separated class names."""
    names: set[str] = set()
    class_objs = [o for o in value.objects() if o.class_name == CLASS_CLASS]
    if not class_objs:
        res.diagnostic("no class objects in receiver", site)
        return []
    for cls_obj in class_objs:
        refs = store.get(FieldAddr(cls_obj.op, CLASS_NAME_FIELD))
        str_objs = [o for o in refs.objects() if o.class_name == STRING_CLASS]
        if not str_objs:
            res.diagnostic("class object has no string-valued class name", site)
            continue
        for str_obj in str_objs:
            for atom in store.get(FieldAddr(str_obj.op, STRING_VALUE_FIELD)):
                if isinstance(atom, StrConst):
                    names.add(atom.value.replace(".", "/"))
                elif atom is STR_TOP:
                    res.diagnostic("unknown class name set (top string)", site)
    return sorted(names)


def _string_values_of(machine, store, value: Value, res, site, what: str) -> list[str]:
    out: set[str] = set()
    str_objs = [o for o in value.objects() if o.class_name == STRING_CLASS]
    if not str_objs:
        res.diagnostic(f"{what} argument holds no string objects", site)
        return []
    for str_obj in str_objs:
        for atom in store.get(FieldAddr(str_obj.op, STRING_VALUE_FIELD)):
            if isinstance(atom, StrConst):
                out.add(atom.value)
            elif atom is STR_TOP:
                res.diagnostic(f"unresolved reflective {what} (top string)", site)
    return sorted(out)


def step_getmethod(machine, state: AbstractState, stmt: Invoke):
    """Resolve public methods named by (class object, name string) pairs and
    record them on a fresh method object bound at `ret`. The third argument
    (the parameter-type array) is not interpreted."""
    from .machine import StepResult

    res = StepResult()
    site = state.code.site()
    fp, store = state.fp, state.store
    recv = machine.eval_atomic(stmt.args[0], fp, store, res.events)
    class_names = _class_names_of(machine, store, recv, res, site)
    name_val = machine.eval_atomic(stmt.args[1], fp, store, res.events)
    method_names = _string_values_of(machine, store, name_val, res, site, "method name")

    resolved: list[MethodDef] = []
    for cn in class_names:
        for mn in method_names:
            try:
                m, _ = machine.table.resolve_method(cn, mn)
            except ResolutionError as exc:
                res.diagnostic(str(exc), site, f"{cn}/{mn}")
                continue
            if "public" not in m.attributes:
                res.diagnostic(
                    f"reflective lookup of non-public method {m.qualified_name}",
                    site,
                    m.qualified_name,
                )
                continue
            if m not in resolved:
                resolved.append(m)
    if not resolved:
        res.diagnostic("unresolved reflective method", site, GETMETHOD_API)
        return res

    op_m = machine.alloc_op(state)
    store = store.joined(
        FieldAddr(op_m, METHOD_TABLE_FIELD),
        Value([MethodHandle(m) for m in resolved]),
    )
    store = store.joined(RegAddr(fp, RET_REG), Value([ObjVal(op_m, METHOD_CLASS)]))
    res.event("allocation", METHOD_CLASS, site=site)
    for m in resolved:
        res.event("method-resolved", m.qualified_name, site=site)
    res.add("getmethod", AbstractState(state.code.tail(), fp, store, state.ka))
    return res


def step_newinstance(machine, state: AbstractState, stmt: Invoke):
    """Instantiate each class reachable through the receiver's class objects
    and transfer control into its default constructor, which is synthesized
    as an invocation prepended to the remaining statements."""
    from .machine import StepResult

    res = StepResult()
    site = state.code.site()
    fp, store = state.fp, state.store
    recv = machine.eval_atomic(stmt.args[0], fp, store, res.events)
    class_names = _class_names_of(machine, store, recv, res, site)

    for cn in class_names:
        cd = machine.table.get(cn)
        if cd is None:
            res.diagnostic(f"newInstance of unknown class '{cn}'", site, cn)
            continue
        if "abstract" in cd.attributes:
            res.diagnostic(f"newInstance of abstract class '{cn}'", site, cn)
            continue
        ctor = machine.table.default_constructor(cd)
        if ctor is None:
            res.diagnostic(f"class '{cn}' has no default constructor", site, cn)
            continue
        op_new = machine.alloc_op(state)
        instance = Value([ObjVal(op_new, cn)])
        store2 = store.joined(RegAddr(fp, RET_REG), instance)
        # the receiver register keeps an alias of the instance so it survives
        # the constructor's own write into ret
        if isinstance(stmt.args[0], Name):
            store2 = store2.joined(RegAddr(fp, stmt.args[0].name), instance)
        store2 = machine.init_object(store2, op_new, cn)
        synth = Invoke(
            kind="direct",
            target=f"{cn}/<init>",
            args=(Name(RET_REG, stmt.pos),),
            types=(),
            pos=stmt.pos,
        )
        res.event("allocation", cn, site=site)
        code = SynthCode(synth, state.code.tail())
        res.add("newinstance", AbstractState(code, fp, store2, state.ka))
    return res


def step_reflect_invoke(machine, state: AbstractState, stmt: Invoke):
    """Invoke every method recorded on the receiver's method objects. The
    argument array is not interpreted; parameters are seeded with unknown
    values of their declared types."""
    from .machine import StepResult, top_value

    res = StepResult()
    site = state.code.site()
    fp, store = state.fp, state.store
    recv = machine.eval_atomic(stmt.args[0], fp, store, res.events)
    method_objs = [o for o in recv.objects() if o.class_name == METHOD_CLASS]
    if not method_objs:
        res.diagnostic("no method objects in receiver", site, REFLECT_INVOKE_API)
        return res
    handles: list[MethodHandle] = []
    for mo in method_objs:
        for h in store.get(FieldAddr(mo.op, METHOD_TABLE_FIELD)).method_handles():
            if h not in handles:
                handles.append(h)
    if not handles:
        res.diagnostic("method object resolves no methods", site, REFLECT_INVOKE_API)
        return res

    target_val = machine.eval_atomic(stmt.args[1], fp, store, res.events)
    for handle in sorted(handles, key=lambda h: h.method.qualified_name):
        m = handle.method
        arg_vals = [top_value(pt) for pt in m.param_types]
        if m.is_static:
            machine.apply_method(m, None, arg_vals, state, res, tag="reflect-invoke")
            continue
        receivers = target_val.objects()
        if not receivers:
            res.diagnostic(
                f"no receiver objects for reflective call to {m.qualified_name}",
                site,
                m.qualified_name,
            )
            continue
        for obj in receivers:
            machine.apply_method(
                m, Value([obj]), arg_vals, state, res, tag="reflect-invoke"
            )
    return res
