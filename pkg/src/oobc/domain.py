"""Abstract domain: pointers, addresses, value sets, stores, machine states.

Values are finite sets of atoms kept in normal form: integer, string, and
boolean atoms each live in a flat lattice (bottom = absent, distinct
constants collapse to a top element on join), so structural equality of
stores doubles as lattice equality. Everything here is immutable; joins
return new values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .frontend import Code, CodeRef, HALT_CODE, HaltCode, MethodDef, SiteId, SynthCode, stmt_to_text

STRING_CLASS = "java/lang/String"
CLASS_CLASS = "java/lang/Class"
METHOD_CLASS = "java/lang/Reflect/Method"
STRING_VALUE_FIELD = "value"
CLASS_NAME_FIELD = "class-name"
METHOD_TABLE_FIELD = "methods"


def truncate_context(history: tuple, k: int) -> tuple:
    """Keep the most recent k call sites (empty for the monovariant mode)."""
    if k <= 0:
        return ()
    return history[-k:] if len(history) > k else history


# ---------------------------------------------------------------------------
# Pointers and addresses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FramePointer:
    method: str
    context: tuple  # bounded call-site history, length <= k

    def __repr__(self) -> str:
        return f"fp({self.method}{list(self.context)})"


ENTRY_FP = FramePointer("<entry>", ())


@dataclass(frozen=True)
class ObjectPointer:
    site: SiteId
    context: tuple

    def __repr__(self) -> str:
        return f"op({self.site}{list(self.context)})"


@dataclass(frozen=True)
class KontAddr:
    site: SiteId
    context: tuple

    def __repr__(self) -> str:
        return f"ka({self.site}{list(self.context)})"


ENTRY_KA = KontAddr((), ())


@dataclass(frozen=True)
class RegAddr:
    fp: FramePointer
    reg: str


@dataclass(frozen=True)
class FieldAddr:
    op: ObjectPointer
    field: str


Addr = Union[RegAddr, FieldAddr, KontAddr]


# ---------------------------------------------------------------------------
# Value atoms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjVal:
    op: ObjectPointer
    class_name: str


@dataclass(frozen=True)
class IntConst:
    value: int


class _IntTop:
    __slots__ = ()
    _instance: Optional["_IntTop"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "IntTop"


@dataclass(frozen=True)
class StrConst:
    value: str


class _StrTop:
    __slots__ = ()
    _instance: Optional["_StrTop"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "StrTop"


@dataclass(frozen=True)
class BoolConst:
    value: bool


class _BoolTop:
    __slots__ = ()
    _instance: Optional["_BoolTop"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BoolTop"


class _Null:
    __slots__ = ()
    _instance: Optional["_Null"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Null"


class _Void:
    __slots__ = ()
    _instance: Optional["_Void"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Void"


INT_TOP = _IntTop()
STR_TOP = _StrTop()
BOOL_TOP = _BoolTop()
NULL = _Null()
VOID = _Void()
TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class FunKont:
    fp: FramePointer
    code: Code  # caller's remaining statements
    ka: KontAddr

    def __hash__(self) -> int:
        return hash((self.fp, self.code, self.ka))


class _HaltKont:
    __slots__ = ()
    _instance: Optional["_HaltKont"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Halt"


HALT_KONT = _HaltKont()


class MethodHandle:
    """A resolved method recorded on a reflective method object.

    Lives in the store like any other atom; identity follows the underlying
    definition so handles from separate resolutions of one method coincide.
    """

    __slots__ = ("method",)

    def __init__(self, method: MethodDef):
        self.method = method

    def __eq__(self, other) -> bool:
        return isinstance(other, MethodHandle) and self.method is other.method

    def __hash__(self) -> int:
        return hash(id(self.method))

    def __repr__(self) -> str:
        return f"handle({self.method.qualified_name})"


Atom = Union[
    ObjVal, IntConst, _IntTop, StrConst, _StrTop, BoolConst, _BoolTop,
    _Null, _Void, FunKont, _HaltKont, MethodHandle,
]


# ---------------------------------------------------------------------------
# Value sets
# ---------------------------------------------------------------------------

def _normalize(atoms: Iterable[Atom]) -> frozenset:
    ints: set = set()
    strs: set = set()
    bools: set = set()
    rest: set = set()
    for a in atoms:
        if isinstance(a, IntConst) or a is INT_TOP:
            ints.add(a)
        elif isinstance(a, StrConst) or a is STR_TOP:
            strs.add(a)
        elif isinstance(a, BoolConst) or a is BOOL_TOP:
            bools.add(a)
        else:
            rest.add(a)
    if INT_TOP in ints or len(ints) > 1:
        ints = {INT_TOP}
    if STR_TOP in strs or len(strs) > 1:
        strs = {STR_TOP}
    if BOOL_TOP in bools or len(bools) > 1:
        bools = {BOOL_TOP}
    return frozenset(ints | strs | bools | rest)


def _atom_leq(a: Atom, b: Atom) -> bool:
    if a == b:
        return True
    if isinstance(a, IntConst):
        return b is INT_TOP
    if isinstance(a, StrConst):
        return b is STR_TOP
    if isinstance(a, BoolConst):
        return b is BOOL_TOP
    return False


class Value:
    """A normalized, immutable set of abstract value atoms."""

    __slots__ = ("atoms", "_hash")

    def __init__(self, atoms: Iterable[Atom] = ()):
        object.__setattr__(self, "atoms", _normalize(atoms))
        object.__setattr__(self, "_hash", hash(self.atoms))

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Value) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(sorted(repr(a) for a in self.atoms))
        return "{" + inner + "}"

    def join(self, other: "Value") -> "Value":
        if not other.atoms:
            return self
        if not self.atoms:
            return other
        return Value(self.atoms | other.atoms)

    def leq(self, other: "Value") -> bool:
        return all(any(_atom_leq(a, b) for b in other.atoms) for a in self.atoms)

    def objects(self) -> list[ObjVal]:
        return sorted(
            (a for a in self.atoms if isinstance(a, ObjVal)),
            key=atom_sort_key,
        )

    def konts(self) -> list:
        return sorted(
            (a for a in self.atoms if isinstance(a, FunKont) or a is HALT_KONT),
            key=atom_sort_key,
        )

    def method_handles(self) -> list[MethodHandle]:
        return sorted(
            (a for a in self.atoms if isinstance(a, MethodHandle)),
            key=atom_sort_key,
        )


EMPTY_VALUE = Value()


def join_value(a: Value, b: Value) -> Value:
    return a.join(b)


def value_leq(a: Value, b: Value) -> bool:
    return a.leq(b)


# ---------------------------------------------------------------------------
# Stores
# ---------------------------------------------------------------------------

class Store:
    """Finite partial map from addresses to value sets; join is point-wise."""

    __slots__ = ("_m", "_hash")

    def __init__(self, mapping: Optional[dict] = None):
        self._m = dict(mapping) if mapping else {}
        self._hash: Optional[int] = None

    @staticmethod
    def empty() -> "Store":
        return Store()

    def get(self, addr: Addr) -> Value:
        return self._m.get(addr, EMPTY_VALUE)

    def __contains__(self, addr: Addr) -> bool:
        return addr in self._m

    def __len__(self) -> int:
        return len(self._m)

    def addresses(self) -> list[Addr]:
        return sorted(self._m.keys(), key=addr_sort_key)

    def items(self) -> list[tuple[Addr, Value]]:
        return sorted(self._m.items(), key=lambda kv: addr_sort_key(kv[0]))

    def joined(self, addr: Addr, value: Value) -> "Store":
        """This store with *value* joined in at *addr* (weak update)."""
        if not value and addr not in self._m:
            return self
        new = dict(self._m)
        cur = new.get(addr)
        new[addr] = value if cur is None else cur.join(value)
        return Store(new)

    def join(self, other: "Store") -> "Store":
        if not other._m:
            return self
        if not self._m:
            return other
        new = dict(self._m)
        for addr, val in other._m.items():
            cur = new.get(addr)
            new[addr] = val if cur is None else cur.join(val)
        return Store(new)

    def leq(self, other: "Store") -> bool:
        for addr, val in self._m.items():
            if addr not in other._m:
                return False
            if not val.leq(other._m[addr]):
                return False
        return True

    def restrict(self, addrs: Iterable[Addr]) -> "Store":
        keep = set(addrs)
        return Store({a: v for a, v in self._m.items() if a in keep})

    def __eq__(self, other) -> bool:
        return isinstance(other, Store) and self._m == other._m

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._m.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Store({len(self._m)} addrs)"


def join_store(a: Store, b: Store) -> Store:
    return a.join(b)


def store_leq(a: Store, b: Store) -> bool:
    return a.leq(b)


# ---------------------------------------------------------------------------
# Machine states
# ---------------------------------------------------------------------------

class AbstractState:
    """One machine configuration: code, frame pointer, store, kont address.

    Under global store widening the per-state store is dropped (None) and
    all states read the single shared store held by the exploration.
    """

    __slots__ = ("code", "fp", "store", "ka", "_hash")

    def __init__(self, code: Code, fp: FramePointer, store: Optional[Store], ka: KontAddr):
        self.code = code
        self.fp = fp
        self.store = store
        self.ka = ka
        self._hash: Optional[int] = None

    @property
    def is_final(self) -> bool:
        return isinstance(self.code, HaltCode)

    def with_store(self, store: Optional[Store]) -> "AbstractState":
        return AbstractState(self.code, self.fp, store, self.ka)

    def advanced(self) -> "AbstractState":
        return AbstractState(self.code.tail(), self.fp, self.store, self.ka)

    def config(self) -> tuple:
        return (self.code, self.fp, self.ka)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AbstractState)
            and self.code == other.code
            and self.fp == other.fp
            and self.ka == other.ka
            and self.store == other.store
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.code, self.fp, self.ka, self.store))
        return self._hash

    def __repr__(self) -> str:
        return f"State({self.code!r}, {self.fp!r}, ka={self.ka!r})"


# ---------------------------------------------------------------------------
# Canonical JSON encoding
#
# Deterministic, tagged encodings used for reports, exports, state keys,
# and sort orders. Sets become arrays sorted by their encoded form.
# ---------------------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def encode_code(code: Code) -> dict:
    if isinstance(code, HaltCode):
        return {"t": "halt"}
    if isinstance(code, SynthCode):
        return {"t": "synth", "stmt": stmt_to_text(code.stmt), "rest": encode_code(code.rest)}
    return {"t": "at", "method": code.method.qualified_name, "index": code.index}


def encode_fp(fp: FramePointer) -> dict:
    return {"t": "fp", "method": fp.method, "context": [list(s) for s in fp.context]}


def encode_op(op: ObjectPointer) -> dict:
    return {"t": "op", "site": list(op.site), "context": [list(s) for s in op.context]}


def encode_ka(ka: KontAddr) -> dict:
    return {"t": "ka", "site": list(ka.site), "context": [list(s) for s in ka.context]}


def encode_addr(addr: Addr) -> dict:
    if isinstance(addr, RegAddr):
        return {"t": "reg", "fp": encode_fp(addr.fp), "reg": addr.reg}
    if isinstance(addr, FieldAddr):
        return {"t": "field", "op": encode_op(addr.op), "field": addr.field}
    return encode_ka(addr)


def encode_atom(atom: Atom) -> dict:
    if isinstance(atom, ObjVal):
        return {"t": "obj", "op": encode_op(atom.op), "class": atom.class_name}
    if isinstance(atom, IntConst):
        return {"t": "int", "value": atom.value}
    if atom is INT_TOP:
        return {"t": "int-top"}
    if isinstance(atom, StrConst):
        return {"t": "str", "value": atom.value}
    if atom is STR_TOP:
        return {"t": "str-top"}
    if isinstance(atom, BoolConst):
        return {"t": "bool", "value": atom.value}
    if atom is BOOL_TOP:
        return {"t": "bool-top"}
    if atom is NULL:
        return {"t": "null"}
    if atom is VOID:
        return {"t": "void"}
    if isinstance(atom, FunKont):
        return {
            "t": "kont",
            "fp": encode_fp(atom.fp),
            "resume": encode_code(atom.code),
            "next": encode_ka(atom.ka),
        }
    if atom is HALT_KONT:
        return {"t": "halt-kont"}
    if isinstance(atom, MethodHandle):
        return {"t": "method", "name": atom.method.qualified_name}
    raise TypeError(f"not an atom: {atom!r}")


def encode_value(value: Value) -> list:
    return sorted((encode_atom(a) for a in value), key=_dumps)


def encode_store(store: Store) -> list:
    pairs = [[encode_addr(a), encode_value(v)] for a, v in store._m.items()]
    return sorted(pairs, key=_dumps)


def atom_sort_key(atom: Atom) -> str:
    return _dumps(encode_atom(atom))


def addr_sort_key(addr: Addr) -> str:
    return _dumps(encode_addr(addr))


def state_sort_key(state: AbstractState, widened: bool) -> str:
    payload = [encode_code(state.code), encode_fp(state.fp), encode_ka(state.ka)]
    if not widened and state.store is not None:
        payload.append(encode_store(state.store))
    return _dumps(payload)


def state_id(sort_key: str, scope: str = "") -> str:
    return hashlib.sha1((scope + "|" + sort_key).encode()).hexdigest()[:12]
