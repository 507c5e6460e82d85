"""Reducts to subclones, term clones, C-structural completeness, Prucnal terms."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from .congruence import canonical, cg_q, con_q, identity, partition_str
from .deduction import QuasivarietyHandle
from .errors import BudgetExceeded, QuasilabError
from .freealg import FreeAlgebra, free_algebra
from .kernel import (App, FiniteAlgebra, Signature, Term, Var, check_term, evaluate,
                     parse_term_named, term_table)
from .morphisms import all_homs, first_hom, is_homomorphism, quotient
from .report import Report, timed

TD_READING = "TD clause read as the identity t(x,x,z) = z"


@dataclass(frozen=True)
class CloneSpec:
    """Generators of a subclone: (name, term, arity) triples."""
    generators: tuple[tuple[str, Term, int], ...]

    def __post_init__(self):
        if not self.generators:
            raise QuasilabError("empty clone specification")

    @classmethod
    def parse(cls, text: str, sig: Signature) -> "CloneSpec":
        """``"meet(x,y); imp(x,y)"`` or ``"f = imp(x, imp(y, x))"``; arity = variables used."""
        gens = []
        for k, item in enumerate(s.strip() for s in text.split(";")):
            if not item:
                continue
            name = None
            if "=" in item:
                name, item = (s.strip() for s in item.split("=", 1))
            t, names = parse_term_named(item, sig)
            gens.append((name or _default_name(t, len(names), k), t, len(names)))
        return cls(tuple(gens))

    @classmethod
    def full(cls, sig: Signature) -> "CloneSpec":
        return cls(tuple((name, App(name, *(Var(i) for i in range(ar))), ar) for name, ar in sig.ops))

    @classmethod
    def of_ops(cls, sig: Signature, names: Sequence[str]) -> "CloneSpec":
        return cls(tuple((n, App(n, *(Var(i) for i in range(sig.arity(n)))), sig.arity(n)) for n in names))

    @property
    def sig(self) -> Signature:
        return Signature(tuple((n, ar) for n, _, ar in self.generators))

    def to_str(self) -> str:
        return "; ".join(f"{n} = {t.to_str()}" for n, t, _ in self.generators)


def _default_name(t: Term, arity: int, k: int) -> str:
    if t.op is not None and list(t.args) == [Var(i) for i in range(arity)]:
        return t.op
    return f"g{k}"


@dataclass
class Reduct:
    base: FiniteAlgebra
    spec: CloneSpec
    algebra: FiniteAlgebra


def reduct(a: FiniteAlgebra, C: CloneSpec) -> Reduct:
    tables = {}
    for name, t, ar in C.generators:
        check_term(t, a.sig)
        if t.nvars() > ar:
            raise QuasilabError(f"generator {name} uses more than {ar} variables")
        tables[name] = np.asarray(term_table(t, a, ar), dtype=np.int32).reshape((a.n,) * ar)
    alg = FiniteAlgebra(f"{a.name}^C", C.sig, list(a.labels), tables)
    return Reduct(a, C, alg)


@dataclass
class TermClone:
    """The k-ary term operations of an algebra as flattened tables."""
    algebra: FiniteAlgebra
    k: int
    free: FreeAlgebra

    @property
    def tables(self) -> np.ndarray:
        return self.free.vectors

    @property
    def truncated(self) -> bool:
        return self.free.truncated

    def __len__(self):
        return self.free.size

    def table(self, i: int) -> np.ndarray:
        return self.tables[i].reshape((self.algebra.n,) * self.k)

    def term(self, i: int) -> Term:
        return self.free.witness(i)

    def index_of(self, table) -> int:
        return self.free.index_of(np.asarray(table).reshape(-1))


def with_constants(a: FiniteAlgebra) -> FiniteAlgebra:
    """``a`` with a nullary op ``k<i>`` naming each element i."""
    ops = list(a.sig.ops) + [(f"k{i}", 0) for i in range(a.n)]
    tables = dict(a.tables)
    for i in range(a.n):
        tables[f"k{i}"] = np.array(i, dtype=np.int32)
    return FiniteAlgebra(f"{a.name}+consts", Signature(tuple(ops)), list(a.labels), tables)


def term_clone(a: FiniteAlgebra, k: int, cap: int = 100_000, constants: bool = False) -> TermClone:
    """Closure of the k projections under the fundamental operations (k-ary term ops)."""
    base = with_constants(a) if constants else a
    if a.n < 2:
        raise QuasilabError("term clone of a trivial algebra")
    F = free_algebra([base], k, cap)
    return TermClone(base, k, F)


# ---------------------------------------------------------------- C-structural completeness

def _separates(a: FiniteAlgebra, b: FiniteAlgebra):
    hs = all_homs(a, b)
    for i in range(a.n):
        for j in range(i + 1, a.n):
            if not any(h.map[i] != h.map[j] for h in hs):
                return (i, j), hs
    return None, hs


def c_structurally_complete(Q: QuasivarietyHandle, C: CloneSpec) -> Report:
    with timed() as t:
        inputs = {"K": Q.names, "clone": C.to_str()}
        assumptions = [Q.assumption().replace("D1", "D4")]
        try:
            Fa = Q.free().algebra()
            FC = reduct(Fa, C).algebra
            for A in Q.K:
                AC = reduct(A, C).algebra
                pair, hs = _separates(AC, FC)
                if pair is not None:
                    return t.stamp(Report("c_structurally_complete", "no", inputs=inputs,
                                          assumptions=assumptions,
                                          witness={"algebra": A.name, "pair": list(pair),
                                                   "pair_labels": [A.labels[p] for p in pair]}))
        except BudgetExceeded as e:
            return t.stamp(Report("c_structurally_complete", "unknown", inputs=inputs,
                                  budget=e.cap, assumptions=assumptions))
        return t.stamp(Report("c_structurally_complete", "yes", inputs=inputs,
                              assumptions=assumptions, witness={"free_size": Fa.n}))


def u_presentable(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], theta: Sequence[int],
                  C: CloneSpec) -> Report:
    """Does the C-reduct of a/theta embed into the C-reduct of a?"""
    with timed() as t:
        theta = canonical(theta)
        inputs = {"algebra": a.name, "theta": partition_str(a, theta), "clone": C.to_str()}
        if theta not in con_q(a, K).elements:
            raise QuasilabError("theta is not a relative congruence")
        qa, surj = quotient(a, theta)
        QC = reduct(qa, C).algebra
        AC = reduct(a, C).algebra
        try:
            h = first_hom(QC, AC, "injective")
        except BudgetExceeded as e:
            return t.stamp(Report("u_presentable", "unknown", inputs=inputs, budget=e.cap))
        if h is None:
            return t.stamp(Report("u_presentable", "no", inputs=inputs,
                                  witness={"quotient_size": qa.n}))
        r = Report("u_presentable", "yes", inputs=inputs,
                   witness={"embedding": {qa.labels[i]: a.labels[h.map[i]] for i in range(qa.n)}})
        r.verifier = lambda: is_homomorphism(QC, AC, h.map) and h.injective
        return t.stamp(r)


# ---------------------------------------------------------------- Prucnal and TD terms

def _ternary_table(a: FiniteAlgebra, t: Term) -> np.ndarray:
    if t.nvars() > 3:
        raise QuasilabError("expected a term in at most 3 variables")
    return np.asarray(term_table(t, a, 3)).reshape(a.n, a.n, a.n)


def prucnal_principal_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], t: Term,
                            C: CloneSpec | None = None) -> Report:
    """For every pair (x, y): c -> t(x,y,c) is an endomorphism of a^C with kernel cg_Q(x,y)."""
    with timed() as tm:
        inputs = {"algebra": a.name, "K": [b.name for b in K], "term": t.to_str(["x", "y", "z"]),
                  "clone": C.to_str() if C else "full"}
        tt = _ternary_table(a, t)
        AC = reduct(a, C).algebra if C else a
        for x, y in iproduct(range(a.n), repeat=2):
            sigma = tt[x, y]
            if not is_homomorphism(AC, AC, sigma):
                return tm.stamp(Report("prucnal_principal", "no", inputs=inputs,
                                       witness={"pair": [x, y], "failure": "not an endomorphism",
                                                "map": sigma.tolist()}))
            want = cg_q(a, K, [(x, y)])
            if canonical(sigma) != want:
                return tm.stamp(Report("prucnal_principal", "no", inputs=inputs,
                                       witness={"pair": [x, y], "failure": "kernel",
                                                "kernel": partition_str(a, canonical(sigma)),
                                                "cg": partition_str(a, want)}))
        return tm.stamp(Report("prucnal_principal", "yes", inputs=inputs,
                               witness={"pairs_checked": a.n * a.n}))


def prucnal_iterate(t: Term, n: int) -> Term:
    """t_n(x1..xn, y1..yn, z) = t(x1, y1, t(x2, y2, ... t(xn, yn, z)));
    variables numbered x's 0..n-1, y's n..2n-1, z = 2n."""
    if n < 1:
        raise QuasilabError("iterate index must be >= 1")
    inner = Var(2 * n)
    for i in reversed(range(n)):
        inner = t.substitute({0: Var(i), 1: Var(n + i), 2: inner})
    return inner


def iterate_kernel(a: FiniteAlgebra, t: Term, xs: Sequence[int], ys: Sequence[int]) -> tuple[int, ...]:
    """Kernel of c -> t_n(xs, ys, c)."""
    n = len(xs)
    tn = prucnal_iterate(t, n)
    vals = [evaluate(tn, a, list(xs) + list(ys) + [c]) for c in range(a.n)]
    return canonical(vals)


def sigma_kernel_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], t: Term, n: int = 2) -> Report:
    """Kernel of sigma_n at every n-tuple of pairs equals the join of the principal cg_Q's."""
    with timed() as tm:
        inputs = {"algebra": a.name, "term": t.to_str(["x", "y", "z"]), "n": n}
        L = con_q(a, K)
        principal = {(x, y): cg_q(a, K, [(x, y)]) for x, y in iproduct(range(a.n), repeat=2)}
        count = 0
        for pairs in iproduct(principal, repeat=n):
            want = identity(a.n)
            for pr in pairs:
                want = L.ljoin(want, principal[pr])
            got = iterate_kernel(a, t, [p[0] for p in pairs], [p[1] for p in pairs])
            count += 1
            if got != want:
                return tm.stamp(Report("sigma_kernel", "no", inputs=inputs,
                                       witness={"pairs": [list(p) for p in pairs],
                                                "kernel": partition_str(a, got),
                                                "join": partition_str(a, want)}))
        return tm.stamp(Report("sigma_kernel", "yes", inputs=inputs,
                               witness={"tuples_checked": count}))


def td_term_check(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], t: Term) -> Report:
    with timed() as tm:
        inputs = {"algebra": a.name, "term": t.to_str(["x", "y", "z"])}
        tt = _ternary_table(a, t)
        for x, z in iproduct(range(a.n), repeat=2):
            if tt[x, x, z] != z:
                return tm.stamp(Report("td_term", "no", inputs=inputs, assumptions=[TD_READING],
                                       witness={"failure": "t(x,x,z) != z", "x": x, "z": z}))
        edprc = True
        for x, y in iproduct(range(a.n), repeat=2):
            th = cg_q(a, K, [(x, y)])
            for c, d in iproduct(range(a.n), repeat=2):
                same = tt[x, y, c] == tt[x, y, d]
                if th[c] == th[d] and not same:
                    return tm.stamp(Report("td_term", "no", inputs=inputs, assumptions=[TD_READING],
                                           witness={"failure": "congruence condition",
                                                    "a": x, "b": y, "c": c, "d": d}))
                if same and th[c] != th[d]:
                    edprc = False
        return tm.stamp(Report("td_term", "yes", inputs=inputs, assumptions=[TD_READING],
                               witness={"edprc_biconditional": edprc}))


def commutes(a: FiniteAlgebra, t: Term, q: Term) -> Report:
    """t(x, y, q(z1..zk)) = q(t(x, y, z1), ..., t(x, y, zk)) for all x, y, z's."""
    with timed() as tm:
        k = q.nvars()
        inputs = {"algebra": a.name, "t": t.to_str(["x", "y", "z"]), "q": q.to_str()}
        tt = _ternary_table(a, t)
        qt = np.asarray(term_table(q, a, k)).reshape((a.n,) * k)
        cells = a.n ** (k + 2)
        if cells > 50_000_000:
            return tm.stamp(Report("commutes", "unknown", inputs=inputs, budget="assignments"))
        g = np.indices((a.n,) * (k + 2)).reshape(k + 2, -1)
        x, y, zs = g[0], g[1], g[2:]
        lhs = tt[x, y, qt[tuple(zs)]]
        rhs = qt[tuple(tt[x, y, z] for z in zs)]
        bad = np.flatnonzero(lhs != rhs)
        if bad.size:
            w = [int(v) for v in g[:, bad[0]]]
            return tm.stamp(Report("commutes", "no", inputs=inputs,
                                   witness={"a": w[0], "b": w[1], "c": w[2:]}))
        return tm.stamp(Report("commutes", "yes", inputs=inputs, witness={"tuples": int(cells)}))
