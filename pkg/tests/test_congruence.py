from itertools import combinations

import pytest
from hypothesis import given, settings

import oracles
from conftest import algebras
from quasilab.congruence import (canonical, cg, cg_q, con_all, con_q, gamma_pseudocomplement,
                                 identity, in_isp, meet, is_filtral, leq, max_separating_congruence,
                                 meet_closure, q_irreducible, three_permute, total)
from quasilab.corpus import corpus
from quasilab.errors import BudgetExceeded, NotAMember
from quasilab.morphisms import product, product_coords, subalgebra


@settings(max_examples=60, deadline=None)
@given(algebras(sizes=(2, 3, 4)))
def test_con_all_matches_bruteforce(a):
    assert {oracles.canon(p) for p in con_all(a).elements} == oracles.congruences(a)


@settings(max_examples=40, deadline=None)
@given(algebras(sizes=(2, 3, 4)), algebras(sizes=(2, 3)))
def test_con_q_matches_bruteforce(a, b):
    if a.sig != b.sig:
        return
    assert {oracles.canon(p) for p in con_q(a, [b]).elements} == oracles.relative_congruences(a, [b])


@settings(max_examples=40, deadline=None)
@given(algebras(sizes=(2, 3, 4)))
def test_cg_is_least(a):
    cons = oracles.congruences(a)
    for x, y in combinations(range(a.n), 2):
        p = cg(a, [(x, y)])
        above = [canonical(q) for q in cons if q[x] == q[y]]
        assert oracles.canon(p) in cons and all(leq(p, q) for q in above)


@settings(max_examples=40, deadline=None)
@given(algebras(sizes=(2, 3)), algebras(sizes=(2, 3)))
def test_isp_membership(a, b):
    if a.sig != b.sig:
        return
    # a in ISP(b) iff the kernels of maps into b meet to the identity
    kers = {oracles.kernel(m) for m in oracles.homs(a, b)}
    m = tuple([0] * a.n)
    for k in kers:
        m = oracles.meet(m, k)
    assert in_isp(a, [b]) == (m == tuple(range(a.n)))


def test_lattice_order_and_covers():
    L = con_all(corpus("chain3"))
    assert L.bottom == identity(3) and L.top == total(3)
    for i, ups in enumerate(L.covers):
        for j in ups:
            assert L.order[i, j] and i != j


@pytest.mark.parametrize("name", ["m2", "m3", "m4", "fano"])
def test_simple_de_morgan_and_fano(name):
    assert len(con_all(corpus(name))) == 2


def test_z4_relative_chain():
    z4 = corpus("z4")
    L = con_q(z4, [z4])
    assert len(L) == 3 and L.is_distributive() is None
    r = q_irreducible(z4, [z4])
    assert r.yes and r.verify() and r.witness["pair_labels"] == ["0", "2"]


def test_q_irreducible_product_fails():
    z2 = corpus("z2")
    P = product([z2, z2])
    assert not q_irreducible(P, [z2]).yes
    with pytest.raises(NotAMember):
        q_irreducible(corpus("z4"), [z2])


def test_cg_q_vs_cg():
    z4 = corpus("z4")
    # relative to Z2 the only kernels are the two-block one and the total one
    assert cg_q(z4, [z4], [(0, 2)]) == canonical([0, 1, 0, 1])
    assert cg_q(z4, [corpus("z2")], [(0, 2)]) == canonical([0, 1, 0, 1])


def test_max_separating_and_gamma():
    lat2 = corpus("lat2")
    P = product([lat2, lat2])
    theta = max_separating_congruence(P, [1, 2], [lat2])
    assert theta[1] != theta[2]
    L = con_q(P, [lat2])
    g = gamma_pseudocomplement(P, [lat2], (0, 1), L)
    # gamma is the largest relative congruence meeting cg_Q(0,1) in the identity
    principal = L.least_containing([(0, 1)])
    assert g in L.elements
    for p in L.elements:
        if meet(p, principal) == L.bottom:
            assert leq(p, g)


def test_meet_closure_cap():
    parts = [canonical([i == j for j in range(6)]) for i in range(6)]
    with pytest.raises(BudgetExceeded):
        meet_closure(parts, cap=3)


def test_filtral_examples():
    m2, z2 = corpus("m2"), corpus("z2")
    coords = product_coords([m2, m2])
    for i in range(2):
        r = is_filtral([m2, m2], canonical(coords[:, i].tolist()), coords)
        assert r.yes and r.verify() and r.witness["filter_generator"] == [i]
    s = canonical([(int(x) + int(y)) % 2 for x, y in coords.tolist()])
    assert is_filtral([z2, z2], s).no


def test_filtral_improper():
    m2 = corpus("m2")
    r = is_filtral([m2, m2], [0, 0, 0, 0])
    assert r.yes and r.witness["improper"]


def test_three_permute_lattice():
    assert three_permute(corpus("chain3")).answer in ("yes", "no")
    assert three_permute(corpus("z4")).yes


def test_subalgebra_congruences():
    fano = corpus("fano")
    bottom, top = 0, fano.n - 1
    chain = subalgebra(fano, [bottom, top])
    assert chain.n == 2
