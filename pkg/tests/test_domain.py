"""Lattice laws for value sets and stores, checked on generated inputs."""

import json

from hypothesis import given, settings
from hypothesis import strategies as st

from oobc.domain import (
    BOOL_TOP,
    BoolConst,
    EMPTY_VALUE,
    ENTRY_FP,
    FALSE,
    FieldAddr,
    FramePointer,
    INT_TOP,
    IntConst,
    KontAddr,
    NULL,
    ObjVal,
    ObjectPointer,
    RegAddr,
    STR_TOP,
    Store,
    StrConst,
    TRUE,
    VOID,
    Value,
    encode_store,
    encode_value,
    join_store,
    join_value,
    store_leq,
    value_leq,
)

_OPS = [ObjectPointer(("M/m", i), ()) for i in range(3)]
_FPS = [ENTRY_FP, FramePointer("M/m", ()), FramePointer("M/n", ())]

atoms = st.one_of(
    st.sampled_from([NULL, VOID, TRUE, FALSE, BOOL_TOP, INT_TOP, STR_TOP]),
    st.integers(min_value=-3, max_value=3).map(IntConst),
    st.sampled_from(["a", "b", "c"]).map(StrConst),
    st.sampled_from([ObjVal(op, "A") for op in _OPS]),
)

values = st.lists(atoms, max_size=5).map(Value)

addrs = st.one_of(
    st.tuples(st.sampled_from(_FPS), st.sampled_from(["x", "y", "ret"])).map(
        lambda t: RegAddr(*t)
    ),
    st.tuples(st.sampled_from(_OPS), st.sampled_from(["f", "g"])).map(
        lambda t: FieldAddr(*t)
    ),
    st.sampled_from([KontAddr((), ()), KontAddr(("M/m", 1), ())]),
)

stores = st.dictionaries(addrs, values, max_size=6).map(Store)


# -- value lattice -----------------------------------------------------------

@settings(max_examples=300)
@given(values)
def test_value_join_idempotent(v):
    assert join_value(v, v) == v


@settings(max_examples=300)
@given(values, values)
def test_value_join_commutative(a, b):
    assert join_value(a, b) == join_value(b, a)


@settings(max_examples=300)
@given(values, values, values)
def test_value_join_associative(a, b, c):
    assert join_value(join_value(a, b), c) == join_value(a, join_value(b, c))


@settings(max_examples=300)
@given(values, values)
def test_value_join_is_upper_bound(a, b):
    j = join_value(a, b)
    assert value_leq(a, j) and value_leq(b, j)


@settings(max_examples=300)
@given(values)
def test_value_leq_reflexive(v):
    assert value_leq(v, v)


@settings(max_examples=300)
@given(values, values)
def test_value_leq_antisymmetric_on_normal_forms(a, b):
    if value_leq(a, b) and value_leq(b, a):
        assert a == b


@settings(max_examples=200)
@given(values, values, values)
def test_value_leq_transitive(a, b, c):
    ab = join_value(a, b)
    abc = join_value(ab, c)
    assert value_leq(a, ab) and value_leq(ab, abc) and value_leq(a, abc)


@settings(max_examples=300)
@given(st.lists(atoms, max_size=6))
def test_flat_lattice_collapse(atom_list):
    v = Value(atom_list)
    ints = [a for a in v if isinstance(a, IntConst) or a is INT_TOP]
    strs = [a for a in v if isinstance(a, StrConst) or a is STR_TOP]
    bools = [a for a in v if isinstance(a, BoolConst) or a is BOOL_TOP]
    assert len(ints) <= 1 and len(strs) <= 1 and len(bools) <= 1
    exact_ints = {a.value for a in atom_list if isinstance(a, IntConst)}
    if len(exact_ints) > 1 or INT_TOP in atom_list:
        assert INT_TOP in v


def test_join_examples():
    assert join_value(Value([StrConst("x")]), EMPTY_VALUE) == Value([StrConst("x")])
    assert join_value(Value([IntConst(1)]), Value([IntConst(2)])) == Value([INT_TOP])
    a, b = ObjVal(_OPS[0], "A"), ObjVal(_OPS[1], "A")
    assert join_value(Value([a]), Value([b])) == Value([a, b])
    assert join_value(Value([TRUE]), Value([FALSE])) == Value([BOOL_TOP])
    assert join_value(Value([StrConst("x")]), Value([StrConst("x")])) == Value(
        [StrConst("x")]
    )


# -- store lattice -----------------------------------------------------------

@settings(max_examples=300)
@given(stores)
def test_store_join_identity_and_idempotence(s):
    assert join_store(s, Store.empty()) == s
    assert join_store(s, s) == s


@settings(max_examples=300)
@given(stores, stores)
def test_store_join_commutative(a, b):
    assert join_store(a, b) == join_store(b, a)


@settings(max_examples=200)
@given(stores, stores, stores)
def test_store_join_associative(a, b, c):
    assert join_store(join_store(a, b), c) == join_store(a, join_store(b, c))


@settings(max_examples=300)
@given(stores, stores)
def test_store_join_is_upper_bound(a, b):
    j = join_store(a, b)
    assert store_leq(a, j) and store_leq(b, j)


@settings(max_examples=300)
@given(stores, stores)
def test_store_leq_antisymmetric(a, b):
    if store_leq(a, b) and store_leq(b, a):
        assert a == b


@settings(max_examples=200)
@given(stores)
def test_store_leq_reflexive(s):
    assert store_leq(s, s)


def test_store_point_wise_collapse():
    a = RegAddr(ENTRY_FP, "x")
    s1 = Store({a: Value([IntConst(1)])})
    s2 = Store({a: Value([IntConst(2)])})
    assert join_store(s1, s2) == Store({a: Value([INT_TOP])})


def test_store_monotone_growth():
    a = RegAddr(ENTRY_FP, "x")
    s = Store({a: Value([IntConst(1)])})
    grown = s.joined(RegAddr(ENTRY_FP, "y"), Value([NULL]))
    assert store_leq(s, grown)
    assert not store_leq(grown, s)


# -- canonical encoding -------------------------------------------------------

@settings(max_examples=200)
@given(stores)
def test_store_encoding_deterministic_and_sorted(s):
    enc = encode_store(s)
    assert enc == encode_store(Store(dict(reversed(s.items()))))
    keys = [json.dumps(pair, sort_keys=True) for pair in enc]
    assert keys == sorted(keys)


@settings(max_examples=200)
@given(values)
def test_value_encoding_sorted(v):
    enc = encode_value(v)
    keys = [json.dumps(a, sort_keys=True) for a in enc]
    assert keys == sorted(keys)
