from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from quasilab.clones import (TD_READING, CloneSpec, c_structurally_complete, commutes,
                             iterate_kernel, prucnal_iterate, prucnal_principal_check, reduct,
                             sigma_kernel_check, td_term_check, term_clone, u_presentable,
                             with_constants)
from quasilab.congruence import cg_q
from quasilab.corpus import corpus
from quasilab.deduction import QuasivarietyHandle
from quasilab.errors import QuasilabError
from quasilab.kernel import evaluate, parse_term

XYZ = ["x", "y", "z"]
PRUCNAL = "imp(imp(x,y), imp(imp(y,x), z))"


def test_clone_spec_parse():
    h3 = corpus("heyting3")
    C = CloneSpec.parse("meet(x,y); f = imp(x, imp(y, x))", h3.sig)
    assert [g[0] for g in C.generators][1] == "f"
    assert C.sig.ops[1] == ("f", 2)
    R = reduct(h3, C)
    # imp(x, imp(y, x)) is constantly 1
    assert set(R.algebra.tables["f"].reshape(-1).tolist()) == {2}
    with pytest.raises(QuasilabError):
        CloneSpec.parse(" ; ", h3.sig)


@pytest.mark.parametrize("name, k, constants", [
    ("impl2", 1, False), ("impl2", 2, False), ("impl2", 3, False), ("lat2", 3, False),
    ("m3", 1, True), ("m3", 1, False), ("z4", 1, False),
])
def test_term_clone_vs_naive(name, k, constants):
    a = corpus(name)
    base = with_constants(a) if constants else a
    tc = term_clone(a, k, constants=constants)
    got = {tuple(int(x) for x in v) for v in tc.tables}
    assert got == oracles.clone_tables(base, k)
    for i in range(len(tc)):
        t = tc.term(i)
        for args in product(range(a.n), repeat=k):
            assert tc.table(i)[args] == oracles.eval_term(t, base, args)


def test_term_clone_sizes():
    assert len(term_clone(corpus("impl2"), 3)) == 38
    assert len(term_clone(corpus("m3"), 1, constants=True)) == 11


def test_csc_heyting():
    h3 = corpus("heyting3")
    Q = QuasivarietyHandle([h3])
    for text in ("meet(x,y); imp(x,y)", "meet(x,y); join(x,y)"):
        r = c_structurally_complete(Q, CloneSpec.parse(text, h3.sig))
        assert r.yes and r.assumptions[0].startswith("D4")
    assert c_structurally_complete(Q, CloneSpec.full(h3.sig)).yes


def test_u_presentable_heyting():
    h3 = corpus("heyting3")
    for text in ("meet(x,y); imp(x,y)", "meet(x,y); join(x,y)"):
        C = CloneSpec.parse(text, h3.sig)
        for x, y in [(0, 1), (1, 2), (0, 2)]:
            r = u_presentable(h3, [h3], cg_q(h3, [h3], [(x, y)]), C)
            assert r.yes and r.verify()


def test_u_presentable_full_clone_blocks_total():
    # with both constants in the clone the one-element quotient cannot embed
    h3 = corpus("heyting3")
    r = u_presentable(h3, [h3], [0, 0, 0], CloneSpec.full(h3.sig))
    assert r.no


def _principal_oracle(a, x, y):
    rel = [c for c in oracles.relative_congruences(a, [a]) if c[x] == c[y]]
    best = rel[0]
    for c in rel[1:]:
        best = oracles.meet(best, c)
    return best


@pytest.mark.parametrize("name", ["impl2", "hilbert4"])
def test_prucnal_vs_oracle(name):
    a = corpus(name)
    t = parse_term(PRUCNAL, a.sig, XYZ)
    r = prucnal_principal_check(a, [a], t)
    ok = True
    for x, y in product(range(a.n), repeat=2):
        sigma = [oracles.eval_term(t, a, (x, y, c)) for c in range(a.n)]
        ok &= oracles.is_hom(a, a, sigma) and oracles.kernel(sigma) == _principal_oracle(a, x, y)
    assert r.yes == ok and ok


def test_prucnal_projection_fails():
    i2 = corpus("impl2")
    r = prucnal_principal_check(i2, [i2], parse_term("z", i2.sig, XYZ))
    assert r.no and r.witness["failure"] == "kernel"


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.data())
def test_prucnal_iterate_structure(n, data):
    a = corpus("hilbert4")
    t = parse_term(PRUCNAL, a.sig, XYZ)
    tn = prucnal_iterate(t, n)
    vals = data.draw(st.lists(st.integers(0, a.n - 1), min_size=2 * n + 1, max_size=2 * n + 1))
    xs, ys, z = vals[:n], vals[n:2 * n], vals[-1]
    expect = z
    for i in reversed(range(n)):
        expect = oracles.eval_term(t, a, (xs[i], ys[i], expect))
    assert evaluate(tn, a, vals) == expect
    assert iterate_kernel(a, t, xs, ys) is not None


def test_sigma_kernel_hilbert():
    a = corpus("hilbert4")
    r = sigma_kernel_check(a, [a], parse_term(PRUCNAL, a.sig, XYZ), 2)
    assert r.yes and r.witness["tuples_checked"] == a.n ** 4


def test_td_term_boolean():
    b2 = corpus("bool2")
    t = parse_term("join(join(meet(x,neg(y)),meet(neg(x),y)),z)", b2.sig, XYZ)
    r = td_term_check(b2, [b2], t)
    assert r.yes and r.witness["edprc_biconditional"] and TD_READING in r.assumptions
    bad = parse_term("x", b2.sig, XYZ)
    assert td_term_check(b2, [b2], bad).no


def test_commutes():
    l2 = corpus("lat2")
    maj = parse_term("join(join(meet(x,y),meet(y,z)),meet(z,x))", l2.sig, XYZ)
    r = commutes(l2, maj, parse_term("meet(x,y)", l2.sig))
    assert r.yes and r.witness["tuples"] == 16
    m3 = corpus("m3")
    r = commutes(m3, parse_term("meet(x,z)", m3.sig, XYZ), parse_term("neg(x)", m3.sig))
    assert r.no
    a, b, (c,) = r.witness["a"], r.witness["b"], r.witness["c"]
    lhs = m3.apply("meet", a, m3.apply("neg", c))
    rhs = m3.apply("neg", m3.apply("meet", a, c))
    assert lhs != rhs


@pytest.mark.parametrize("name, text", [
    ("heyting3", "meet(x,y); imp(x,y)"), ("heyting3", "meet(x,y); join(x,y)"),
    ("m3", "meet(x,y); join(x,y)"), ("m3", "neg(x)"), ("impl2", "imp(x,y)"),
    ("chain3", "meet(x,y)"),
])
def test_csc_rank_bound(name, text):
    # D4: one more free generator does not change the verdict
    a = corpus(name)
    C = CloneSpec.parse(text, a.sig)
    lo = QuasivarietyHandle([a])
    hi = QuasivarietyHandle([a], free_rank=lo.rank + 1)
    assert c_structurally_complete(lo, C).answer == c_structurally_complete(hi, C).answer
