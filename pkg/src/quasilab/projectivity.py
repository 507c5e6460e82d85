"""Projectivity, weak projectivity and primitivity of Q(K).

Both projectivity checks work in F = F_Q(g), g the size of a minimum generating
tuple of b, with f0: F ->> b sending the free generators onto that tuple.

* b is projective iff f0 has a section: a homomorphism s: b -> F with
  f0 s = id.  (A retraction of any free algebra onto b can be moved onto f0
  by sending each generator of b to a preimage.)
* b is weakly projective iff b embeds into F/theta for every relative
  congruence theta <= ker f0.  Any C in Q mapping onto b contains a
  g-generated subalgebra mapping onto b via the chosen generators, and that
  subalgebra is F/theta for such a theta.
"""
from __future__ import annotations

from typing import Sequence

from .congruence import (canonical, con_q, in_isp, leq, meet, meet_closure,
                         num_blocks, partition_str, q_irreducible)
from .deduction import QuasivarietyHandle
from .errors import BudgetExceeded, NotAMember
from .freealg import eval_hom
from .kernel import FiniteAlgebra, print_algebra
from .morphisms import (all_homs, canonical_form, first_hom, isomorphic, mingens, quotient,
                        same_signature, subalgebras_upto_iso)
from .report import Report, timed


def _require_member(Q: QuasivarietyHandle, b: FiniteAlgebra):
    same_signature(Q.K[0], b)
    if not in_isp(b, Q.K):
        raise NotAMember(f"{b.name} is not in ISP({', '.join(Q.names)})")


def _presentation(Q: QuasivarietyHandle, b: FiniteAlgebra):
    gens = mingens(b)
    F = Q.free(len(gens))
    return gens, F, eval_hom(F, b, gens)


def projective(Q: QuasivarietyHandle, b: FiniteAlgebra) -> Report:
    with timed() as t:
        inputs = {"K": Q.names, "algebra": b.name}
        _require_member(Q, b)
        try:
            gens, F, f0 = _presentation(Q, b)
            Fa = F.algebra()
            domains = {x: [e for e in range(Fa.n) if f0.map[e] == x] for x in range(b.n)}
            s = first_hom(b, Fa, domains=domains)
        except BudgetExceeded as e:
            return t.stamp(Report("projective", "unknown", inputs=inputs, budget=e.cap))
        if s is None:
            return t.stamp(Report("projective", "no", inputs=inputs,
                                  witness={"free_rank": F.n, "generators": [b.labels[g] for g in gens]},
                                  notes=["the canonical surjection from the free algebra has no section"]))
        names = [f"x{j}" for j in range(F.n)]
        r = Report("projective", "yes", inputs=inputs,
                   witness={"free_rank": F.n, "surjection": list(f0.map), "section": list(s.map),
                            "section_terms": {b.labels[x]: F.witness(s.map[x]).to_str(names)
                                              for x in range(b.n)}},
                   data={"surjection": f0, "section": s})
        r.verifier = lambda: (f0.is_compatible() and s.is_compatible()
                              and all(f0.map[s.map[x]] == x for x in range(b.n)))
        return t.stamp(r)


def weakly_projective(Q: QuasivarietyHandle, b: FiniteAlgebra, cap: int | None = None) -> Report:
    with timed() as t:
        inputs = {"K": Q.names, "algebra": b.name}
        _require_member(Q, b)
        try:
            gens, F, f0 = _presentation(Q, b)
            Fa = F.algebra()
            k0 = canonical(f0.map)
            below = {meet(k0, c) for c in F.coordinate_kernels()} | {k0}
            thetas = sorted(meet_closure(below, cap), key=lambda p: (-num_blocks(p), p))
            for theta in thetas:
                C, _ = quotient(Fa, theta, f"{Fa.name}/theta")
                if first_hom(b, C, "injective") is None:
                    return t.stamp(Report(
                        "weakly_projective", "no", inputs=inputs,
                        witness={"free_rank": F.n, "theta": list(theta),
                                 "theta_blocks": num_blocks(theta),
                                 "quotient": print_algebra(C)},
                        data={"theta": theta, "quotient": C}))
        except BudgetExceeded as e:
            return t.stamp(Report("weakly_projective", "unknown", inputs=inputs, budget=e.cap))
        r = Report("weakly_projective", "yes", inputs=inputs,
                   witness={"free_rank": F.n, "congruences_checked": len(thetas)})
        r.verifier = lambda: all(leq(th, k0) for th in thetas)
        return t.stamp(r)


def endo_kernel_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra]) -> Report:
    """Is every relative congruence of ``a`` the kernel of an endomorphism?"""
    with timed() as t:
        inputs = {"algebra": a.name, "K": [b.name for b in K]}
        try:
            L = con_q(a, K)
            endos = all_homs(a, a)
        except BudgetExceeded as e:
            return t.stamp(Report("endo_kernel_check", "unknown", inputs=inputs, budget=e.cap))
        by_kernel: dict = {}
        for h in endos:
            by_kernel.setdefault(canonical(h.map), []).append(h)
        rows, missing = [], []
        for theta in L.elements:
            hs = by_kernel.get(theta, [])
            idem = next((h for h in hs if all(h.map[h.map[x]] == h.map[x] for x in range(a.n))), None)
            rows.append({"theta": partition_str(a, theta),
                         "endo": list(hs[0].map) if hs else None,
                         "idempotent": list(idem.map) if idem else None})
            if not hs:
                missing.append(partition_str(a, theta))
        answer = "no" if missing else "yes"
        r = Report("endo_kernel_check", answer, inputs=inputs,
                   witness={"congruences": rows, "missing": missing},
                   data={"all_idempotent": all(row["idempotent"] for row in rows)})
        r.verifier = lambda: all(h.is_compatible() for h in endos)
        return t.stamp(r)


def q_irreducible_candidates(Q: QuasivarietyHandle) -> list[FiniteAlgebra]:
    """Q-irreducible subalgebras of members of K, one per isomorphism type."""
    out: list[FiniteAlgebra] = []
    keys: set = set()
    for A in Q.K:
        for c in subalgebras_upto_iso(A):
            if c.n < 2 or not q_irreducible(c, Q.K).yes:
                continue
            key = canonical_form(c)
            if key in keys:
                continue
            keys.add(key)
            out.append(c)
    return out


def primitive(Q: QuasivarietyHandle) -> Report:
    """Is every subquasivariety of Q(K) structural?  Checked via weak projectivity."""
    with timed() as t:
        inputs = {"K": Q.names}
        try:
            cands = q_irreducible_candidates(Q)
        except BudgetExceeded as e:
            return t.stamp(Report("primitive", "unknown", inputs=inputs, budget=e.cap))
        results = []
        unknown = None
        for c in cands:
            r = weakly_projective(Q, c)
            results.append({"algebra": c.name, "size": c.n, "weakly_projective": r.answer})
            if r.no:
                return t.stamp(Report("primitive", "no", inputs=inputs,
                                      witness={"algebra": c.name, "table": print_algebra(c),
                                               "failure": r.witness, "candidates": results},
                                      data={"algebra": c, "report": r}))
            if r.answer == "unknown" and unknown is None:
                unknown = r.budget
        if unknown is not None:
            return t.stamp(Report("primitive", "unknown", inputs=inputs, budget=unknown,
                                  witness={"candidates": results}))
        return t.stamp(Report("primitive", "yes", inputs=inputs, witness={"candidates": results}))
