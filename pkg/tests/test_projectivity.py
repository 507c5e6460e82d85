import pytest

import oracles
from quasilab.congruence import in_isp
from quasilab.corpus import corpus
from quasilab.deduction import QuasivarietyHandle
from quasilab.errors import NotAMember
from quasilab.morphisms import mingens, product
from quasilab.projectivity import (endo_kernel_check, primitive, projective,
                                   q_irreducible_candidates, weakly_projective)


def Q(*names):
    return QuasivarietyHandle([corpus(n) for n in names])


def retract_oracle(b, F):
    """Is b a retract of F (brute force over all maps)?"""
    sections = [s for s in oracles.homs(b, F) if len(set(s)) == b.n]
    retractions = oracles.homs(F, b)
    return any(all(r[s[x]] == x for x in range(b.n)) for s in sections for r in retractions)


@pytest.mark.parametrize("name, answer", [
    ("m2", "yes"), ("m3", "no"), ("z2", "yes"), ("z4", "yes"), ("impl2", "yes"),
    ("heyting3", "yes"),
])
def test_projective_vs_retract_oracle(name, answer):
    b = corpus(name)
    q = Q(name)
    r = projective(q, b)
    assert r.answer == answer and r.verify()
    F = oracles.free_as_algebra(q.K, len(mingens(b)))
    assert retract_oracle(b, F) == (answer == "yes")


@pytest.mark.parametrize("name", ["m2", "m3", "m4", "z2", "z4", "impl2", "heyting3"])
def test_wp_equals_p_on_si(name):
    b = corpus(name)
    q = Q(name)
    assert weakly_projective(q, b).answer == projective(q, b).answer


def test_wp_failure_witness_replays():
    m3 = corpus("m3")
    r = weakly_projective(Q("m3"), m3)
    assert r.no
    C = r.data["quotient"]
    # C lies in Q(M3), maps onto M3 and does not contain a copy of M3
    assert in_isp(C, [m3])
    assert any(len(set(h)) == m3.n for h in oracles.homs(C, m3))
    assert not any(len(set(h)) == m3.n for h in oracles.homs(m3, C))


def test_non_member_rejected():
    with pytest.raises(NotAMember):
        projective(Q("z2"), corpus("z4"))


def test_endo_kernels():
    r = endo_kernel_check(corpus("z4"), [corpus("z4")])
    assert r.yes and r.verify()
    assert endo_kernel_check(corpus("m3"), [corpus("m3")]).no
    lat2 = corpus("lat2")
    r = endo_kernel_check(product([lat2, lat2]), [lat2])
    assert r.yes and r.data["all_idempotent"]


def test_candidates_are_irreducible():
    names = sorted(c.n for c in q_irreducible_candidates(Q("m4")))
    assert names == [2, 3, 4]


@pytest.mark.parametrize("names, answer", [
    (("impl2",), "yes"), (("lat2",), "yes"), (("z4",), "yes"), (("z2",), "yes"),
    (("m2",), "yes"), (("m3",), "no"), (("heyting3",), "yes"),
])
def test_primitive(names, answer):
    r = primitive(Q(*names))
    assert r.answer == answer
    if r.no:
        assert oracles.isomorphic(r.data["algebra"], corpus("m3"))


def _wp_at_rank(b, Q, rank):
    """Weak projectivity searched over F_Q(rank) with a surjection onto b."""
    from quasilab.congruence import canonical, meet, meet_closure
    from quasilab.freealg import eval_hom
    from quasilab.morphisms import first_hom, quotient
    gens = list(mingens(b))
    images = gens + [gens[0] if gens else 0] * (rank - len(gens))
    F = Q.free(rank)
    Fa = F.algebra()
    k0 = canonical(eval_hom(F, b, images).map)
    below = {meet(k0, c) for c in F.coordinate_kernels()} | {k0}
    return all(first_hom(b, quotient(Fa, th)[0], "injective") is not None
               for th in meet_closure(below))


@pytest.mark.parametrize("name", ["lat2", "bdl2", "chain3", "m2", "impl2", "z2", "m3", "heyting3"])
def test_d3_rank_bound(name):
    # the generator bound: one more free generator never exposes a new failure
    from quasilab.errors import Truncated
    b = corpus(name)
    Q = QuasivarietyHandle([b], size_cap=3000)
    try:
        rank = b.n + 1
        Q.free(rank)
    except Truncated:
        rank = len(mingens(b)) + 1
    assert _wp_at_rank(b, Q, rank) == weakly_projective(Q, b).yes
