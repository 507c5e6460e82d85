"""Derivability, admissibility and structural completeness for Q = Q(K).

Admissibility is validity in F_Q(omega).  It is decided in F_Q(k) with
k = max over B in K of the size of a minimum generating set of B: if a
substitution refutes a rule in F_Q(omega), its conclusion fails in some B
under some assignment of the variables it uses; writing those values as
terms in a generating tuple of B gives a substitution into k variables that
still makes the premises identities and still refutes the conclusion.  The
same substitution argument turns any point-separating map into F_Q(omega)
into one into F_Q(k), which is what the structural completeness and
structural core checks use.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .congruence import in_isp, q_irreducible
from .errors import BudgetExceeded, NotAMember, QuasilabError
from .freealg import FreeAlgebra, free_algebra
from .kernel import (App, FiniteAlgebra, Quasiequation, Term, Var,
                     evaluate, find_counterexample)
from .morphisms import (all_homs, embeds, first_hom, generated_subalgebra, mingens,
                        same_signature, subalgebra, subalgebras_upto_iso)
from .report import Report, timed


class QuasivarietyHandle:
    """Q(K) for a finite list K of finite algebras, with cached free algebras."""

    def __init__(self, K: Sequence[FiniteAlgebra], free_rank: int | None = None,
                 size_cap: int | None = None, assignment_budget: int | None = None):
        self.K = list(K)
        if not self.K:
            raise QuasilabError("empty generator class")
        for b in self.K[1:]:
            same_signature(self.K[0], b)
        self.bound = max(1, max(len(mingens(b)) for b in self.K))
        self.rank = self.bound if free_rank is None else free_rank
        self.size_cap = size_cap
        self.assignment_budget = assignment_budget

    @property
    def sig(self):
        return self.K[0].sig

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.K]

    def free(self, n: int | None = None) -> FreeAlgebra:
        F = free_algebra(self.K, self.rank if n is None else n, self.size_cap)
        F.require_complete()
        return F

    def assumption(self) -> str:
        if self.rank == self.bound:
            return f"D1 free-rank bound: rank {self.rank} = max minimum generating set size over K"
        return f"D1 free-rank bound overridden: rank {self.rank} (default {self.bound})"

    def __repr__(self):
        return f"Q({', '.join(self.names)})"


def _inputs(Q: QuasivarietyHandle, **extra) -> dict:
    return {"K": Q.names, **extra}


def _assignment_dict(q: Quasiequation, alg: FiniteAlgebra, values) -> dict:
    names = q.names or tuple(f"x{i}" for i in range(q.nvars))
    return {names[i]: alg.labels[v] for i, v in enumerate(values)}


def _refutes(alg: FiniteAlgebra, q: Quasiequation, values) -> bool:
    ok = all(evaluate(s, alg, values) == evaluate(t, alg, values) for s, t in q.premises)
    s, t = q.conclusion
    return ok and evaluate(s, alg, values) != evaluate(t, alg, values)


def derivable(Q: QuasivarietyHandle, phi: Quasiequation) -> Report:
    with timed() as t:
        inputs = _inputs(Q, rule=phi.to_str())
        try:
            for b in Q.K:
                ce = find_counterexample(b, phi, Q.assignment_budget)
                if ce is not None:
                    r = Report("derivable", "no", inputs=inputs,
                               witness={"algebra": b.name, "assignment": _assignment_dict(phi, b, ce),
                                        "values": list(ce)})
                    r.verifier = lambda b=b, ce=ce: _refutes(b, phi, ce)
                    return t.stamp(r)
        except BudgetExceeded as e:
            return t.stamp(Report("derivable", "unknown", inputs=inputs, budget=e.cap))
        return t.stamp(Report("derivable", "yes", inputs=inputs,
                              witness={"checked": Q.names}))


def admissible(Q: QuasivarietyHandle, phi: Quasiequation, rank: int | None = None) -> Report:
    with timed() as t:
        inputs = _inputs(Q, rule=phi.to_str())
        assumptions = [Q.assumption()] if rank is None else [f"free rank fixed at {rank}"]
        try:
            F = Q.free(rank)
            Fa = F.algebra()
            ce = find_counterexample(Fa, phi, Q.assignment_budget)
        except BudgetExceeded as e:
            return t.stamp(Report("admissible", "unknown", inputs=inputs, budget=e.cap,
                                  assumptions=assumptions))
        if ce is None:
            return t.stamp(Report("admissible", "yes", inputs=inputs, assumptions=assumptions,
                                  witness={"free_rank": F.n, "free_size": F.size}))
        gnames = [f"x{j}" for j in range(F.n)]
        subst = {Var(i): F.witness(e) for i, e in enumerate(ce)}
        names = phi.names or tuple(f"x{i}" for i in range(phi.nvars))
        r = Report("admissible", "no", inputs=inputs, assumptions=assumptions,
                   witness={"free_rank": F.n,
                            "substitution": {names[i]: F.witness(e).to_str(gnames) for i, e in enumerate(ce)}},
                   data={"substitution": subst})
        r.verifier = lambda: _substitution_refutes(F, phi, [F.witness(e) for e in ce])
        return t.stamp(r)


def _substitution_refutes(F: FreeAlgebra, phi: Quasiequation, terms: Sequence[Term]) -> bool:
    """Premises become identities of Q and the conclusion does not."""
    mapping = {i: s for i, s in enumerate(terms)}

    def vec(u: Term) -> np.ndarray:
        return F.term_vector(u.substitute(mapping))
    if not all(np.array_equal(vec(s), vec(t)) for s, t in phi.premises):
        return False
    s, t = phi.conclusion
    return not np.array_equal(vec(s), vec(t))


def _separation(a: FiniteAlgebra, target: FiniteAlgebra):
    """(first inseparable pair or None, number of homs)."""
    hs = all_homs(a, target)
    sep = np.zeros((a.n, a.n), dtype=bool)
    for h in hs:
        m = np.asarray(h.map)
        sep |= m[:, None] != m[None, :]
    for i in range(a.n):
        for j in range(i + 1, a.n):
            if not sep[i, j]:
                return (i, j), hs
    return None, hs


def _separating_witness(a, hs):
    """For each pair, the index of the first hom separating it."""
    out = {}
    for i in range(a.n):
        for j in range(i + 1, a.n):
            out[f"{i},{j}"] = next(k for k, h in enumerate(hs) if h.map[i] != h.map[j])
    return out


def structurally_complete(Q: QuasivarietyHandle) -> Report:
    with timed() as t:
        inputs = _inputs(Q)
        try:
            F = Q.free()
            Fa = F.algebra()
            for a in Q.K:
                pair, hs = _separation(a, Fa)
                if pair is not None:
                    w = {"algebra": a.name, "pair": list(pair),
                         "pair_labels": [a.labels[pair[0]], a.labels[pair[1]]]}
                    rule = _admissible_characteristic(Q, a)
                    if rule is not None:
                        w["admissible_not_derivable"] = rule.to_str()
                    return t.stamp(Report("structurally_complete", "no", inputs=inputs,
                                          assumptions=[Q.assumption()], witness=w,
                                          data={"rule": rule}))
        except BudgetExceeded as e:
            return t.stamp(Report("structurally_complete", "unknown", inputs=inputs,
                                  budget=e.cap, assumptions=[Q.assumption()]))
        return t.stamp(Report("structurally_complete", "yes", inputs=inputs,
                              assumptions=[Q.assumption()],
                              witness={"free_rank": F.n, "free_size": F.size}))


def _admissible_characteristic(Q, a) -> Quasiequation | None:
    """Characteristic quasiequation of a Q-irreducible subalgebra of ``a`` that is admissible."""
    try:
        for c in subalgebras_upto_iso(a):
            if not q_irreducible(c, Q.K).yes:
                continue
            phi = characteristic_quasiequation(Q, c)
            if admissible(Q, phi).yes:
                return phi
    except (BudgetExceeded, QuasilabError):
        return None
    return None


def in_structural_core(Q: QuasivarietyHandle, b: FiniteAlgebra) -> Report:
    with timed() as t:
        inputs = _inputs(Q, algebra=b.name)
        same_signature(Q.K[0], b)
        try:
            Fa = Q.free().algebra()
            pair, hs = _separation(b, Fa)
        except BudgetExceeded as e:
            return t.stamp(Report("in_structural_core", "unknown", inputs=inputs, budget=e.cap,
                                  assumptions=[Q.assumption()]))
        if pair is not None:
            return t.stamp(Report("in_structural_core", "no", inputs=inputs,
                                  assumptions=[Q.assumption()],
                                  witness={"inseparable_pair": list(pair),
                                           "pair_labels": [b.labels[pair[0]], b.labels[pair[1]]]}))
        r = Report("in_structural_core", "yes", inputs=inputs, assumptions=[Q.assumption()],
                   witness={"homs": [list(h.map) for h in hs],
                            "separating": _separating_witness(b, hs)})
        r.verifier = lambda: all(h.is_compatible() for h in hs)
        return t.stamp(r)


def fixed_coordinate_certificate(Q: QuasivarietyHandle, b: FiniteAlgebra) -> dict | None:
    """Some B in K and e in B with no homomorphism b -> <e>_B.

    Sending every free generator to e is a homomorphism from each F_Q(m) onto
    <e>_B, so b then has no homomorphism into, let alone an embedding into,
    any free algebra of Q.
    """
    for B in Q.K:
        for e in range(B.n):
            carrier = generated_subalgebra(B, [e])
            S = subalgebra(B, carrier)
            if first_hom(b, S) is None:
                return {"algebra": B.name, "element": B.labels[e],
                        "subalgebra": [B.labels[x] for x in carrier]}
    return None


def exact(Q: QuasivarietyHandle, b: FiniteAlgebra, max_vars: int = 3) -> Report:
    """Does b embed into a free algebra of Q?  Searches ranks 1..max_vars."""
    with timed() as t:
        inputs = _inputs(Q, algebra=b.name, max_vars=max_vars)
        same_signature(Q.K[0], b)
        cert = fixed_coordinate_certificate(Q, b)
        if cert is not None:
            return t.stamp(Report("exact", "no", inputs=inputs,
                                  witness={"certificate": cert},
                                  notes=["definitive: no homomorphism into the subalgebra generated "
                                         "by one element, which every free algebra maps onto"]))
        for m in range(1, max_vars + 1):
            try:
                F = Q.free(m)
                Fa = F.algebra()
                h = first_hom(b, Fa, "injective")
            except BudgetExceeded as e:
                return t.stamp(Report("exact", "unknown", inputs=inputs, budget=e.cap,
                                      witness={"verdict": f"no-up-to {m - 1}"}))
            if h is not None:
                gnames = [f"x{j}" for j in range(m)]
                r = Report("exact", "yes", inputs=inputs,
                           witness={"rank": m, "embedding": list(h.map),
                                    "terms": {b.labels[x]: F.witness(h.map[x]).to_str(gnames)
                                              for x in range(b.n)}},
                           data={"hom": h})
                r.verifier = lambda h=h: h.is_compatible() and h.injective
                return t.stamp(r)
        return t.stamp(Report("exact", "unknown", inputs=inputs, budget="max_vars",
                              witness={"verdict": f"no-up-to {max_vars}"},
                              notes=["bounded search: no embedding into F_Q(m) for m <= max_vars; "
                                     "not a refutation"]))


def characteristic_quasiequation(Q: QuasivarietyHandle, b: FiniteAlgebra) -> Quasiequation:
    """Diagram of b as premises, a monolith pair as conclusion (variable x_i per element i)."""
    r = q_irreducible(b, Q.K)
    if not r.yes:
        raise QuasilabError(f"{b.name} is not Q-irreducible")
    p, q = r.data["pair"]
    premises = []
    for name, ar in b.sig.ops:
        t = b.tables[name]
        for args in np.ndindex(*((b.n,) * ar)):
            premises.append((App(name, *(Var(i) for i in args)), Var(int(t[args]))))
    names = tuple(f"x{i}" for i in range(b.n))
    return Quasiequation(tuple(premises), (Var(p), Var(q)), b.n, names)
