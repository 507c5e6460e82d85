from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import SIGS, algebras
from quasilab.corpus import corpus
from quasilab.errors import BudgetExceeded, ParseError, QuasilabError
from quasilab.kernel import (App, FiniteAlgebra, Quasiequation, Signature, Var, evaluate, find_counterexample, holds, parse_algebra,
                             parse_algebras, parse_quasiequation, parse_term, print_algebra,
                             term_table)

LAT2 = """
algebra lat2   # smallest lattice
elements 0 1
op meet/2
0 0
0 1
op join/2
0 1 1 1
end
"""

P_IMPL = "imp(imp(imp(x,y),imp(imp(y,x),z)),z)"


def test_parse_lattice():
    a = parse_algebra(LAT2)
    assert a.n == 2 and a.sig.ops == (("meet", 2), ("join", 2))
    assert a.apply("join", 0, 1) == 1 and a.apply("meet", 0, 1) == 0


def test_parse_m3():
    m3 = corpus("m3")
    assert m3.labels == ("0", "a", "1")
    assert m3.sig.names == ["meet", "join", "neg", "c0", "c1"]
    assert m3.apply("neg", 1) == 1


@pytest.mark.parametrize("text, msg", [
    ("algebra t\nelements 0 1\nop f/2\n0 1 0\nend\n", "table size mismatch"),
    ("algebra t\nelements 0 1\nop f/1\n0 7\nend\n", "0 1|7"),
    ("algebra t\nelements 0 1\nop f/1\n0 1\nop f/1\n0 1\nend\n", "duplicate"),
])
def test_parse_errors(text, msg):
    with pytest.raises(QuasilabError, match=msg):
        parse_algebra(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        parse_algebra("algebra t\nelements 0 1\nop f/1\n0 1\nbogus\n")
    assert e.value.line == 5


def test_parse_term():
    m3 = corpus("m3")
    t = parse_term("meet(x, neg(x))", m3.sig)
    assert t is App("meet", Var(0), App("neg", Var(0)))
    t = parse_term("imp(imp(x,y), z)", corpus("impl2").sig)
    assert t.nvars() == 3
    for bad in ("meet(x)", "meet(x,y", "neg(x))"):
        with pytest.raises(QuasilabError):
            parse_term(bad, m3.sig)


def test_hash_consing():
    a = App("f", Var(0), Var(1))
    assert App("f", Var(0), Var(1)) is a
    # iterated sharing stays linear in node count
    t = Var(0)
    for _ in range(200):
        t = App("f", t, t)
    assert t.node_count() == 201


def test_eval_examples():
    m3 = corpus("m3")
    assert evaluate(Var(0), m3, [2]) == 2
    assert evaluate(parse_term("neg(x)", m3.sig), m3, [1]) == 1
    impl = corpus("impl2")
    p = parse_term(P_IMPL, impl.sig, ["x", "y", "z"])
    assert evaluate(p, impl, [0, 1, 0]) == 0
    # pointwise reference: p(x,y,z) = 1 if x = y else z
    for x, y, z in product(range(2), repeat=3):
        assert evaluate(p, impl, [x, y, z]) == (1 if x == y else z)


def test_quasiequation_parse():
    z4 = corpus("z4")
    q = parse_quasiequation("add(x,x)=zero => x=zero", z4.sig)
    assert q.nvars == 1 and len(q.premises) == 1
    assert not holds(z4, q) and find_counterexample(z4, q) == (2,)
    q = parse_quasiequation("add(x,y)=add(y,x)", z4.sig)
    assert q.is_equation and holds(z4, q)


def test_assignment_budget():
    z4 = corpus("z4")
    q = parse_quasiequation("add(x,y)=add(y,x)", z4.sig)
    with pytest.raises(BudgetExceeded) as e:
        find_counterexample(z4, q, budget=10)
    assert e.value.cap == "assignments"


@settings(max_examples=60, deadline=None)
@given(algebras())
def test_print_parse_roundtrip(a):
    b = parse_algebras(print_algebra(a))[0]
    assert b.key() == a.key() and b.labels == a.labels


def _terms(sig, nvars):
    leaves = st.sampled_from([Var(i) for i in range(nvars)])

    def extend(children):
        ops = [(n, ar) for n, ar in sig.ops if ar > 0]
        return st.sampled_from(ops).flatmap(
            lambda op: st.tuples(*([children] * op[1])).map(lambda args: App(op[0], *args)))
    return st.recursive(leaves, extend, max_leaves=8)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_term_table_matches_recursion(data):
    a = data.draw(algebras(sigs=[s for s in SIGS if any(ar for _, ar in s.ops)]))
    t = data.draw(_terms(a.sig, 3))
    tab = term_table(t, a, 3)
    for vals in product(range(a.n), repeat=3):
        assert tab[vals] == oracles.eval_term(t, a, vals) == evaluate(t, a, vals)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_term_string_roundtrip(data):
    a = corpus("m3")
    t = data.draw(_terms(a.sig, 3))
    names = ["x", "y", "z"]
    assert parse_term(t.to_str(names), a.sig, names) is t


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_holds_matches_bruteforce(data):
    a = data.draw(algebras(sigs=[SIGS[0]]))
    s1, t1, s2, t2 = (data.draw(_terms(a.sig, 2)) for _ in range(4))
    q = Quasiequation(((s1, t1),), (s2, t2), 2)
    assert holds(a, q) == oracles.holds(a, q)


def test_table_values_validated():
    with pytest.raises(QuasilabError, match="out-of-range"):
        FiniteAlgebra("t", Signature((("g", 1),)), ["0", "1"], {"g": np.array([0, 2])})
