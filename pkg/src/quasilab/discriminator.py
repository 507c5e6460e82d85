"""Dual i-discriminators, principal intersection terms, fixedpoint discriminators, ideals."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from math import lcm
from typing import Sequence

import numpy as np

from .clones import commutes
from .congruence import CongruenceLattice, canonical, cg_q, con_all, con_q, meet
from .deduction import QuasivarietyHandle
from .errors import QuasilabError
from .kernel import App, FiniteAlgebra, Term, Var, term_table
from .projectivity import q_irreducible_candidates
from .report import Report, timed

XYZ = ["x", "y", "z"]
TERM_NODE_CAP = 100_000


def _table(a: FiniteAlgebra, t: Term, k: int) -> np.ndarray:
    if t.nvars() > k:
        raise QuasilabError(f"expected a term in at most {k} variables")
    return np.asarray(term_table(t, a, k)).reshape((a.n,) * k)


def _names(algs) -> list[str]:
    return [a.name for a in algs]


# ---------------------------------------------------------------- dual i-discriminator

def _dual_i_failure(a: FiniteAlgebra, pt: np.ndarray) -> dict | None:
    n = a.n
    for x, y, z in iproduct(range(n), repeat=3):
        if x != y and pt[x, y, z] != z:
            return {"clause": "a != b implies p(a,b,c) = c", "tuple": [x, y, z]}
    for x, y in iproduct(range(n), repeat=2):
        if pt[x, x, y] != pt[x, x, 0]:
            return {"clause": "p(a,a,b) = p(a,a,c)", "tuple": [x, x, y]}
    pi = pt[np.arange(n), np.arange(n), np.arange(n)]
    for x in range(n):
        if pi[pi[x]] != pi[x]:
            return {"clause": "pi(pi(a)) = pi(a)", "tuple": [x]}
    return None


def is_dual_i_discriminator(algs: Sequence[FiniteAlgebra], p: Term) -> Report:
    with timed() as t:
        inputs = {"algebras": _names(algs), "p": p.to_str(XYZ)}
        pis = {}
        for a in algs:
            pt = _table(a, p, 3)
            fail = _dual_i_failure(a, pt)
            if fail is not None:
                fail["algebra"] = a.name
                fail["labels"] = [a.labels[v] for v in fail["tuple"]]
                return t.stamp(Report("dual_i_discriminator", "no", inputs=inputs, witness=fail))
            pis[a.name] = [a.labels[int(pt[x, x, x])] for x in range(a.n)]
        r = Report("dual_i_discriminator", "yes", inputs=inputs, witness={"pi": pis})
        r.verifier = lambda: all(_dual_i_failure(a, _table(a, p, 3)) is None for a in algs)
        return t.stamp(r)


def is_rpip_witness(algs: Sequence[FiniteAlgebra], p4: Term, q4: Term) -> Report:
    """p(a,b,c,d) = q(a,b,c,d) iff a = b or c = d, on every listed algebra."""
    with timed() as t:
        inputs = {"algebras": _names(algs), "p": p4.to_str(), "q": q4.to_str()}
        count = 0
        for a in algs:
            pt, qt = _table(a, p4, 4), _table(a, q4, 4)
            g = np.indices((a.n,) * 4)
            want = (g[0] == g[1]) | (g[2] == g[3])
            bad = np.argwhere((pt == qt) != want)
            count += a.n ** 4
            if len(bad):
                tup = [int(v) for v in bad[0]]
                return t.stamp(Report("rpip", "no", inputs=inputs,
                                      witness={"algebra": a.name, "tuple": tup,
                                               "labels": [a.labels[v] for v in tup],
                                               "p": a.labels[int(pt[tuple(tup)])],
                                               "q": a.labels[int(qt[tuple(tup)])]}))
        return t.stamp(Report("rpip", "yes", inputs=inputs, witness={"tuples_checked": count}))


def rtpip_mask(a: FiniteAlgebra, tables: np.ndarray) -> np.ndarray:
    """Which flattened ternary tables satisfy p(x,y,u) = p(x,y,v) iff x = y or u = v."""
    n = a.n
    T = tables.reshape(-1, n, n, n)
    ok = np.ones(len(T), dtype=bool)
    for x, y in iproduct(range(n), repeat=2):
        rows = T[:, x, y, :]
        if x == y:
            ok &= (rows == rows[:, :1]).all(axis=1)
        else:
            srt = np.sort(rows, axis=1)
            ok &= (srt[:, 1:] != srt[:, :-1]).all(axis=1)
    return ok


def is_rtpip_witness(algs: Sequence[FiniteAlgebra], p: Term) -> Report:
    """Pointwise form on Q-irreducibles: p(a,b,c) = p(a,b,d) iff a = b or c = d."""
    with timed() as t:
        inputs = {"algebras": _names(algs), "p": p.to_str(XYZ)}
        for a in algs:
            pt = _table(a, p, 3)
            for x, y, c, d in iproduct(range(a.n), repeat=4):
                if (pt[x, y, c] == pt[x, y, d]) != (x == y or c == d):
                    return t.stamp(Report("rtpip", "no", inputs=inputs,
                                          witness={"algebra": a.name, "tuple": [x, y, c, d]}))
        return t.stamp(Report("rtpip", "yes", inputs=inputs))


# ---------------------------------------------------------------- Jonsson terms

def jonsson_terms(p: Term) -> tuple[Term, Term]:
    x, y, z = Var(0), Var(1), Var(2)
    t1 = p.substitute({0: p, 1: y, 2: x})
    t2 = p.substitute({0: p.substitute({2: y}), 1: z, 2: z})
    return t1, t2


def verify_jonsson(algs: Sequence[FiniteAlgebra], p: Term) -> Report:
    with timed() as t:
        t1, t2 = jonsson_terms(p)
        inputs = {"algebras": _names(algs), "t1": t1.to_str(XYZ), "t2": t2.to_str(XYZ)}
        for a in algs:
            T1, T2 = _table(a, t1, 3), _table(a, t2, 3)
            n = a.n
            for x, y, z in iproduct(range(n), repeat=3):
                checks = [("t1(x,y,x) = x", T1[x, y, x] == x), ("t2(x,y,x) = x", T2[x, y, x] == x),
                          ("t1(x,x,z) = x", T1[x, x, z] == x), ("t2(x,x,z) = z", T2[x, x, z] == z),
                          ("t1(x,z,z) = t2(x,z,z)", T1[x, z, z] == T2[x, z, z])]
                for name, ok in checks:
                    if not ok:
                        return t.stamp(Report("jonsson", "no", inputs=inputs,
                                              witness={"algebra": a.name, "equation": name,
                                                       "x": x, "y": y, "z": z}))
        return t.stamp(Report("jonsson", "yes", inputs=inputs, data={"t1": t1, "t2": t2}))


# ---------------------------------------------------------------- synthesis

@dataclass
class Synthesis:
    term: Term
    n: int
    L: int
    report: Report


def _compose_p(p: Term, inner: Term) -> Term:
    return p.substitute({2: inner})


def synth_dual_i_discriminator(irreducibles: Sequence[FiniteAlgebra], p: Term,
                               node_cap: int = TERM_NODE_CAP) -> Synthesis:
    if not is_rtpip_witness(irreducibles, p).yes:
        raise QuasilabError("precondition: p does not witness RTPIP on the given algebras")
    # n: lcm of cycle lengths of z -> p(a,b,z), a != b
    bound = 1
    for a in irreducibles:
        pt = _table(a, p, 3)
        for x, y in iproduct(range(a.n), repeat=2):
            if x != y:
                bound = lcm(bound, _perm_order(pt[x, y]))
    pn, n = p, 1
    while True:
        if all(_fixes_off_diagonal(a, _table(a, pn, 3)) for a in irreducibles):
            break
        if n >= bound:
            raise QuasilabError("no iterate fixes c off the diagonal")
        pn, n = _compose_p(p, pn), n + 1
    taus = [np.array([_table(a, pn, 3)[x, x, x] for x in range(a.n)]) for a in irreducibles]
    L = 1
    while not all(np.array_equal(_power(tau, 2 * L), _power(tau, L)) for tau in taus):
        L += 1
        if L > 10_000:
            raise QuasilabError("diagonal does not stabilize")
    x, y, z = Var(0), Var(1), Var(2)
    q = z
    for _ in range(L):
        q = pn.substitute({0: q.substitute({2: x}), 1: q.substitute({2: y}), 2: q})
        if q.node_count() > node_cap:
            raise QuasilabError(f"term exceeds {node_cap} nodes")
    rep = is_dual_i_discriminator(irreducibles, q)
    if not rep.yes:
        raise QuasilabError("synthesized term failed verification")
    rep.witness.update({"n": n, "L": L, "nodes": q.node_count()})
    return Synthesis(q, n, L, rep)


def _perm_order(perm: np.ndarray) -> int:
    seen = np.zeros(len(perm), dtype=bool)
    order = 1
    for s in range(len(perm)):
        if seen[s]:
            continue
        k, c = 0, s
        while not seen[c]:
            seen[c] = True
            c = int(perm[c])
            k += 1
        order = lcm(order, k)
    return order


def _power(f: np.ndarray, k: int) -> np.ndarray:
    out = np.arange(len(f))
    for _ in range(k):
        out = f[out]
    return out


def _fixes_off_diagonal(a, pt) -> bool:
    return all(pt[x, y, c] == c for x, y, c in iproduct(range(a.n), repeat=3) if x != y)


# ---------------------------------------------------------------- EDPRC

def edprc_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], p: Term) -> Report:
    """(c,d) in cg_Q(a,b) iff p(c,d,u) = p(c,d,p(a,b,u)) for all u."""
    with timed() as t:
        inputs = {"algebra": a.name, "p": p.to_str(XYZ)}
        pt = _table(a, p, 3)
        n = a.n
        for x, y in iproduct(range(n), repeat=2):
            th = cg_q(a, K, [(x, y)])
            inner = pt[x, y]
            for c, d in iproduct(range(n), repeat=2):
                formula = bool(np.all(pt[c, d] == pt[c, d][inner]))
                if formula != (th[c] == th[d]):
                    return t.stamp(Report("edprc", "no", inputs=inputs,
                                          witness={"a": x, "b": y, "c": c, "d": d,
                                                   "in_cg": th[c] == th[d], "formula": formula}))
        return t.stamp(Report("edprc", "yes", inputs=inputs, witness={"tuples": n ** 4}))


# ---------------------------------------------------------------- pointed machinery

def zero_of(a: FiniteAlgebra, zero: str | None = None) -> int:
    consts = a.sig.constants
    if zero is None:
        for c in ("zero", "c0", "0"):
            if c in consts:
                zero = c
                break
        else:
            if not consts:
                raise QuasilabError("signature has no constant to designate as 0")
            zero = consts[0]
    if zero not in consts:
        raise QuasilabError(f"{zero!r} is not a constant")
    return int(a.tables[zero][()])


def is_subtraction_term(a: FiniteAlgebra, s: Term, zero: str | None = None) -> Report:
    with timed() as t:
        z = zero_of(a, zero)
        st = _table(a, s, 2)
        inputs = {"algebra": a.name, "s": s.to_str(["x", "y"])}
        for x in range(a.n):
            if st[x, x] != z:
                return t.stamp(Report("subtraction", "no", inputs=inputs,
                                      witness={"identity": "s(x,x) = 0", "x": x}))
            if st[x, z] != x:
                return t.stamp(Report("subtraction", "no", inputs=inputs,
                                      witness={"identity": "s(x,0) = x", "x": x}))
        return t.stamp(Report("subtraction", "yes", inputs=inputs))


def zero_regular_witnesses(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], rs: Sequence[Term],
                           zero: str | None = None) -> Report:
    """r_1(x,y) = ... = r_n(x,y) = 0 iff x = y, plus 0/cg_Q(a,b) = {0} iff a = b."""
    with timed() as t:
        z = zero_of(a, zero)
        inputs = {"algebra": a.name, "rs": [r.to_str(["x", "y"]) for r in rs]}
        tabs = [_table(a, r, 2) for r in rs]
        for x, y in iproduct(range(a.n), repeat=2):
            allzero = all(tb[x, y] == z for tb in tabs)
            if allzero != (x == y):
                return t.stamp(Report("zero_regular", "no", inputs=inputs,
                                      witness={"clause": "terms", "x": x, "y": y}))
        for x, y in iproduct(range(a.n), repeat=2):
            th = cg_q(a, K, [(x, y)])
            trivial = sum(1 for v in range(a.n) if th[v] == th[z]) == 1
            if trivial != (x == y):
                return t.stamp(Report("zero_regular", "no", inputs=inputs,
                                      witness={"clause": "principal 0-class", "x": x, "y": y}))
        return t.stamp(Report("zero_regular", "yes", inputs=inputs))


def u_term_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], u: Term,
                 zero: str | None = None) -> Report:
    """u(a,a) = 0, u(a,0) = a, u(0,a) = 0 and a in I_Q(b) iff u(a,b) = 0."""
    with timed() as t:
        z = zero_of(a, zero)
        ut = _table(a, u, 2)
        inputs = {"algebra": a.name, "u": u.to_str(["x", "y"])}
        for x in range(a.n):
            for name, ok in (("u(a,a) = 0", ut[x, x] == z), ("u(a,0) = a", ut[x, z] == x),
                             ("u(0,a) = 0", ut[z, x] == z)):
                if not ok:
                    return t.stamp(Report("u_term", "no", inputs=inputs,
                                          witness={"identity": name, "a": x}))
        for b in range(a.n):
            th = cg_q(a, K, [(b, z)])
            for x in range(a.n):
                if (th[x] == th[z]) != (ut[x, b] == z):
                    return t.stamp(Report("u_term", "no", inputs=inputs,
                                          witness={"clause": "a in I_Q(b) iff u(a,b) = 0",
                                                   "a": x, "b": b}))
        return t.stamp(Report("u_term", "yes", inputs=inputs))


# ---------------------------------------------------------------- fixedpoint discriminator

def _point_value(a: FiniteAlgebra, point: Term) -> int:
    vals = np.unique(_table(a, point, max(point.nvars(), 1)))
    if len(vals) != 1:
        raise QuasilabError("designated point term is not constant")
    return int(vals[0])


def fixedpoint_role_failure(a: FiniteAlgebra, d: Term, zero: int) -> dict | None:
    dt = _table(a, d, 3)
    for x, y, c in iproduct(range(a.n), repeat=3):
        want = c if x == y else zero
        if dt[x, y, c] != want:
            return {"algebra": a.name, "tuple": [x, y, c]}
    return None


def p_from_d(d: Term, point: Term) -> Term:
    """p(x,y,z) = d(0, d(x,y,z), z)."""
    return d.substitute({0: point, 1: d, 2: Var(2)})


def d_from_p(p: Term) -> Term:
    """d(x,y,z) = p(z, p(x,y,z), z)."""
    return p.substitute({0: Var(2), 1: p, 2: Var(2)})


def fixedpoint_conversions(algs: Sequence[FiniteAlgebra], term: Term, kind: str,
                           point: Term) -> tuple[Term, Report]:
    """Convert a fixedpoint discriminator d to p (kind='d') or p to d (kind='p') and verify."""
    with timed() as t:
        inputs = {"algebras": _names(algs), kind: term.to_str(XYZ), "point": point.to_str(XYZ)}
        if kind == "d":
            out = p_from_d(term, point)
            for a in algs:
                z = _point_value(a, point)
                pt = _table(a, out, 3)
                fail = _dual_i_failure(a, pt)
                if fail is None and any(pt[x, x, x] != z for x in range(a.n)):
                    fail = {"clause": "p(x,x,x) = 0"}
                if fail is not None:
                    fail["algebra"] = a.name
                    return out, t.stamp(Report("fixedpoint", "no", inputs=inputs, witness=fail))
        elif kind == "p":
            out = d_from_p(term)
            for a in algs:
                fail = fixedpoint_role_failure(a, out, _point_value(a, point))
                if fail is not None:
                    return out, t.stamp(Report("fixedpoint", "no", inputs=inputs, witness=fail))
        else:
            raise QuasilabError("kind must be 'd' or 'p'")
        return out, t.stamp(Report("fixedpoint", "yes", inputs=inputs,
                                   witness={"converted": out.to_str(XYZ)}))


def fixedpoint_from_regularity(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], u: Term,
                               rs: Sequence[Term], simples: Sequence[FiniteAlgebra] | None = None,
                               zero: str | None = None) -> tuple[Term, Report]:
    """d(x,y,z) = u(u(...u(z, r_n(x,y))..., r_2(x,y)), r_1(x,y)), r_1 outermost."""
    if not rs:
        raise QuasilabError("need at least one regularity witness")
    if not u_term_check(a, K, u, zero).yes:
        raise QuasilabError("precondition: u fails the ideal-term checks")
    if not zero_regular_witnesses(a, K, rs, zero).yes:
        raise QuasilabError("precondition: the r_i do not witness relative 0-regularity")
    with timed() as t:
        x, y, z = Var(0), Var(1), Var(2)
        d = z
        for r in reversed(rs):
            d = u.substitute({0: d, 1: r.substitute({0: x, 1: y})})
        targets = list(simples) if simples is not None else [a]
        for b in targets:
            fail = fixedpoint_role_failure(b, d, zero_of(b, zero))
            if fail is not None:
                return d, t.stamp(Report("fixedpoint_from_regularity", "no",
                                         inputs={"algebra": a.name}, witness=fail))
        return d, t.stamp(Report("fixedpoint_from_regularity", "yes",
                                 inputs={"algebra": a.name}, witness={"d": d.to_str(XYZ)}))


# ---------------------------------------------------------------- ideals

@dataclass
class IdealSet:
    members: tuple[int, ...]
    congruence: tuple[int, ...]


def _zero_class(p, z) -> tuple[int, ...]:
    return tuple(i for i in range(len(p)) if p[i] == p[z])


def _compose_class(th, ph, z) -> set:
    return {c for b in range(len(th)) if th[b] == th[z] for c in range(len(ph)) if ph[c] == ph[b]}


def ideals(a: FiniteAlgebra, K: Sequence[FiniteAlgebra] | None, s: Term,
           zero: str | None = None) -> tuple[list[IdealSet], Report]:
    """Ideals as 0-classes of (relative, when K is given) congruences."""
    if not is_subtraction_term(a, s, zero).yes:
        raise QuasilabError("not subtractive: s fails the subtraction identities")
    with timed() as t:
        z = zero_of(a, zero)
        L: CongruenceLattice = con_q(a, K) if K is not None else con_all(a)
        byclass: dict = {}
        for th in L.elements:
            byclass.setdefault(_zero_class(th, z), []).append(th)
        out = [IdealSet(cls, ths[0]) for cls, ths in sorted(byclass.items(), key=lambda kv: (len(kv[0]), kv[0]))]
        hom, comp = True, True
        for th, ph in iproduct(L.elements, repeat=2):
            ct, cp = set(_zero_class(th, z)), set(_zero_class(ph, z))
            if set(_zero_class(meet(th, ph), z)) != ct & cp:
                hom = False
            j = set(_zero_class(L.ljoin(th, ph), z))
            least = min((set(c) for c in byclass if ct | cp <= set(c)), key=len)
            if j != least:
                hom = False
            if j != _compose_class(th, ph, z):
                comp = False
        injective = all(len(v) == 1 for v in byclass.values())
        answer = "yes" if hom else "no"
        r = Report("ideals", answer, inputs={"algebra": a.name,
                                             "relative_to": _names(K) if K is not None else None},
                   witness={"ideals": [[a.labels[i] for i in I.members] for I in out],
                            "lattice_hom": hom, "injective": injective, "isomorphism": hom and injective,
                            "join_is_composition": comp})
        return out, t.stamp(r)


# ---------------------------------------------------------------- primitivity

def primitive_by_commutation(Q: QuasivarietyHandle, p: Term) -> Report:
    """Sufficient condition: p is a dual i-discriminator on the Q-irreducibles and every
    fundamental operation commutes with it."""
    with timed() as t:
        inputs = {"K": Q.names, "p": p.to_str(XYZ)}
        cands = q_irreducible_candidates(Q)
        pre = is_dual_i_discriminator(cands, p)
        if not pre.yes:
            raise QuasilabError(f"precondition: p is not a dual i-discriminator ({pre.witness})")
        failures = []
        for A in Q.K:
            for name, ar in A.sig.ops:
                r = commutes(A, p, App(name, *(Var(i) for i in range(ar))))
                if not r.yes:
                    failures.append({"algebra": A.name, "op": name, "witness": r.witness})
        if failures:
            return t.stamp(Report("primitive_by_commutation", "unknown", inputs=inputs,
                                  budget="sufficient_condition", witness={"failures": failures},
                                  notes=["inconclusive: a non-commuting operation does not refute "
                                         "primitivity; use the weak projectivity check"]))
        return t.stamp(Report("primitive_by_commutation", "yes", inputs=inputs,
                              witness={"irreducibles": _names(cands), "pi": pre.witness["pi"]}))
