import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from quasilab.corpus import corpus
from quasilab.deduction import (QuasivarietyHandle, admissible, characteristic_quasiequation,
                                derivable, exact, fixed_coordinate_certificate,
                                in_structural_core, structurally_complete)
from quasilab.errors import QuasilabError
from quasilab.kernel import App, Quasiequation, Var, parse_quasiequation
from quasilab.morphisms import embeds, product, subalgebras_upto_iso


def Q(*names, **kw):
    return QuasivarietyHandle([corpus(n) for n in names], **kw)


def test_handle_rank_is_mingens_bound():
    assert Q("m3").rank == 1
    assert Q("m4").rank == 2
    assert Q("lat2").rank == 2
    assert Q("z4").rank == 1
    assert "D1" in Q("m3").assumption()
    assert "overridden" in Q("m3", free_rank=2).assumption()


def test_z4_rule():
    q = Q("z4")
    phi = parse_quasiequation("add(x,x)=zero => x=zero", q.sig)
    r = derivable(q, phi)
    assert r.no and r.verify() and r.witness["assignment"] == {"x": "2"}
    r = admissible(q, phi)
    assert r.no and r.verify() and r.witness["substitution"] == {"x": "add(x0, x0)"}


def test_kleene_rule_admissible_not_derivable():
    q = Q("m3")
    phi = parse_quasiequation("neg(x)=x => x=y", q.sig)
    r = derivable(q, phi)
    assert r.no and r.verify()
    assert admissible(q, phi).yes


@pytest.mark.parametrize("names, answer", [
    (("impl2",), "yes"), (("lat2",), "yes"), (("bdl2",), "yes"), (("m2",), "yes"),
    (("z2",), "yes"), (("z4",), "yes"), (("heyting3",), "yes"), (("m3",), "no"),
])
def test_structural_completeness(names, answer):
    q = Q(*names)
    r = structurally_complete(q)
    assert r.answer == answer
    # oracle: every member of K separated by homs into the naive F(k)
    F = oracles.free_as_algebra(q.K, q.rank)
    assert all(oracles.separated(a, F) for a in q.K) == (answer == "yes")


def test_sc_witness_rule():
    r = structurally_complete(Q("m3"))
    rule = r.data["rule"]
    assert rule is not None
    q = Q("m3")
    assert admissible(q, rule).yes and derivable(q, rule).no


def _qe_strategy(sig, nvars=2):
    leaves = st.sampled_from([Var(i) for i in range(nvars)] +
                             [App(c) for c in sig.constants])
    ops = [(n, ar) for n, ar in sig.ops if ar > 0]

    def extend(children):
        return st.sampled_from(ops).flatmap(
            lambda op: st.tuples(*([children] * op[1])).map(lambda a: App(op[0], *a)))
    term = st.recursive(leaves, extend, max_leaves=4)
    eq = st.tuples(term, term)
    return st.builds(lambda ps, c: Quasiequation(tuple(ps), c, nvars),
                     st.lists(eq, max_size=2), eq)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_derivable_and_admissible_vs_bruteforce(data):
    name = data.draw(st.sampled_from(["lat2", "impl2", "z2", "m3"]))
    q = Q(name)
    phi = data.draw(_qe_strategy(q.sig))
    assert derivable(q, phi).yes == oracles.holds(q.K[0], phi)
    F = oracles.free_as_algebra(q.K, q.rank)
    assert admissible(q, phi).yes == oracles.holds(F, phi)


def test_structural_core():
    assert in_structural_core(Q("m3"), corpus("m3")).no
    r = in_structural_core(Q("z4"), corpus("z2"))
    assert r.yes and r.verify()


def test_exact():
    r = exact(Q("m3"), corpus("m2"), 1)
    assert r.yes and r.verify() and r.witness["rank"] == 1
    r = exact(Q("m3"), corpus("m3"), 3)
    assert r.no and "certificate" in r.witness
    assert fixed_coordinate_certificate(Q("m3"), corpus("m3")) is not None


def test_exact_bounded_is_unknown():
    # lat2 has no one-element certificate; rank 0 search finds nothing
    r = exact(Q("lat2"), product([corpus("lat2")] * 2), 0)
    assert r.answer == "unknown" and r.witness["verdict"] == "no-up-to 0"


@pytest.mark.parametrize("name", ["m2", "z2", "impl2"])
def test_characteristic_quasiequation(name):
    A = corpus(name)
    q = Q(name)
    phi = characteristic_quasiequation(q, A)
    assert not oracles.holds(A, phi)
    for C in subalgebras_upto_iso(product([A, A])):
        assert (not oracles.holds(C, phi)) == embeds(A, C).yes


def test_characteristic_needs_irreducible():
    z2 = corpus("z2")
    with pytest.raises(QuasilabError):
        characteristic_quasiequation(Q("z2"), product([z2, z2]))
