"""Congruences, absolute and relative congruence lattices.

A congruence is stored as a block-id array: entry ``i`` is the least element
of the block containing ``i``.  Relative congruences (relative to a finite
class K) are never found by testing quotients; they are the meets of kernels
of homomorphisms into members of K, together with the total relation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, NotAMember, QuasilabError
from .kernel import FiniteAlgebra
from .morphisms import homs, product_coords, same_signature
from .report import Report, timed

LATTICE_CAP = 20_000


# ---------------------------------------------------------------- partitions

def canonical(labels: Sequence[int]) -> tuple[int, ...]:
    first: dict = {}
    return tuple(first.setdefault(v, i) for i, v in enumerate(np.asarray(labels).tolist()))


def meet(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    return canonical([x * (len(p) + 1) + y for x, y in zip(p, q)])


def join(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    parent = list(range(len(p)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x
    for part in (p, q):
        for i, b in enumerate(part):
            ri, rb = find(i), find(b)
            if ri != rb:
                parent[max(ri, rb)] = min(ri, rb)
    return canonical([find(i) for i in range(len(p))])


def leq(p: Sequence[int], q: Sequence[int]) -> bool:
    """p refines q."""
    q = np.asarray(q)
    return bool(np.all(q == q[np.asarray(p)]))


def identity(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def total(n: int) -> tuple[int, ...]:
    return (0,) * n


def num_blocks(p: Sequence[int]) -> int:
    return len(set(p))


def relation_matrix(p: Sequence[int]) -> np.ndarray:
    p = np.asarray(p)
    return p[:, None] == p[None, :]


def restrict(p: Sequence[int], sub: Sequence[int]) -> tuple[int, ...]:
    return canonical([p[i] for i in sub])


def is_congruence(a: FiniteAlgebra, p: Sequence[int]) -> bool:
    p = np.asarray(p, dtype=np.int64)
    if p.shape != (a.n,) or canonical(p) != tuple(p.tolist()):
        return False
    for name, ar in a.sig.ops:
        if ar == 0:
            continue
        t = a.tables[name]
        # replacing any single argument by its block representative must not change the block
        for pos in range(ar):
            moved = np.take(t, p, axis=pos)
            if not np.array_equal(p[t], p[moved]):
                return False
    return True


def block_lists(p: Sequence[int]) -> list[list[int]]:
    out: dict[int, list[int]] = {}
    for i, b in enumerate(p):
        out.setdefault(int(b), []).append(i)
    return list(out.values())


def partition_str(a: FiniteAlgebra, p: Sequence[int]) -> str:
    """Blocks separated by '|', e.g. ``0 2|1 3``."""
    return "|".join(" ".join(a.labels[i] for i in blk) for blk in block_lists(p))


# ---------------------------------------------------------------- principal congruences

def cg(a: FiniteAlgebra, pairs: Iterable[tuple[int, int]]) -> tuple[int, ...]:
    """Smallest congruence containing ``pairs`` (union-find with translation propagation)."""
    parent = list(range(a.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x
    ops = [(a.tables[name], ar) for name, ar in a.sig.ops if ar > 0]
    queue = [(int(x), int(y)) for x, y in pairs]
    while queue:
        x, y = queue.pop()
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        parent[max(rx, ry)] = min(rx, ry)
        for t, ar in ops:
            for pos in range(ar):
                u = np.take(t, x, axis=pos).reshape(-1)
                v = np.take(t, y, axis=pos).reshape(-1)
                diff = u != v
                queue.extend(zip(u[diff].tolist(), v[diff].tolist()))
    return canonical([find(i) for i in range(a.n)])


# ---------------------------------------------------------------- lattices

@dataclass
class CongruenceLattice:
    algebra: FiniteAlgebra
    generators: list[str]               # names of K; empty for the absolute lattice
    elements: list[tuple[int, ...]]     # sorted: more blocks first, then lexicographic
    order: np.ndarray = field(repr=False)   # order[i, j] = elements[i] <= elements[j]
    covers: list[list[int]] = field(repr=False)  # upper covers

    @classmethod
    def build(cls, algebra, generators, elements):
        elements = sorted(set(elements), key=lambda p: (-num_blocks(p), p))
        m = len(elements)
        order = np.zeros((m, m), dtype=bool)
        for i, p in enumerate(elements):
            for j, q in enumerate(elements):
                order[i, j] = leq(p, q)
        covers = []
        for i in range(m):
            ups = [j for j in range(m) if j != i and order[i, j]]
            covers.append([j for j in ups if not any(k != j and order[k, j] for k in ups)])
        return cls(algebra, list(generators), elements, order, covers)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, p) -> bool:
        return tuple(p) in self._index

    def __iter__(self):
        return iter(self.elements)

    @property
    def _index(self) -> dict:
        if not hasattr(self, "_idx"):
            self._idx = {p: i for i, p in enumerate(self.elements)}
        return self._idx

    def index(self, p) -> int:
        return self._index[tuple(p)]

    @property
    def bottom(self) -> tuple[int, ...]:
        return self.elements[int(np.flatnonzero(self.order.all(axis=1))[0])]

    @property
    def top(self) -> tuple[int, ...]:
        return total(self.algebra.n)

    @property
    def has_identity(self) -> bool:
        return identity(self.algebra.n) in self

    def meet_irreducible(self) -> list[tuple[int, ...]]:
        """Members with exactly one upper cover."""
        return [p for i, p in enumerate(self.elements) if len(self.covers[i]) == 1]

    def atoms(self) -> list[tuple[int, ...]]:
        b = self.index(self.bottom)
        return [self.elements[j] for j in self.covers[b]]

    def lmeet(self, p, q) -> tuple[int, ...]:
        r = meet(p, q)
        if r not in self:
            raise QuasilabError("lattice not closed under meet")
        return r

    def ljoin(self, p, q) -> tuple[int, ...]:
        """Join inside this lattice: the least member above both."""
        i, j = self.index(p), self.index(q)
        ups = np.flatnonzero(self.order[i] & self.order[j])
        best = ups[0]
        for k in ups:
            if self.order[k, best]:
                best = k
        return self.elements[int(best)]

    def least_containing(self, pairs) -> tuple[int, ...]:
        cands = [p for p in self.elements if all(p[x] == p[y] for x, y in pairs)]
        out = self.top
        for p in cands:
            out = meet(out, p)
        return out

    def is_distributive(self) -> tuple[int, int, int] | None:
        """None if distributive, else a failing triple of indices."""
        m = len(self.elements)
        E = self.elements
        for i in range(m):
            for j in range(m):
                for k in range(j + 1, m):
                    lhs = self.lmeet(E[i], self.ljoin(E[j], E[k]))
                    rhs = self.ljoin(self.lmeet(E[i], E[j]), self.lmeet(E[i], E[k]))
                    if lhs != rhs:
                        return i, j, k
        return None

    def to_json(self) -> dict:
        return {"algebra": self.algebra.name, "relative_to": self.generators,
                "nodes": [list(p) for p in self.elements], "covers": self.covers}


def meet_closure(parts: Iterable[tuple[int, ...]], cap: int | None = None) -> set:
    cap = LATTICE_CAP if cap is None else cap
    out: set = set()
    frontier = list(dict.fromkeys(tuple(p) for p in parts))
    out.update(frontier)
    gens = list(frontier)
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                r = meet(p, g)
                if r not in out:
                    out.add(r)
                    nxt.append(r)
                    if len(out) > cap:
                        raise BudgetExceeded("lattice_size", f"more than {cap} congruences")
        frontier = nxt
    return out


def con_all(a: FiniteAlgebra, cap: int | None = None) -> CongruenceLattice:
    cap = LATTICE_CAP if cap is None else cap
    principal = {cg(a, [(i, j)]) for i, j in combinations(range(a.n), 2)}
    out = {identity(a.n)} | principal
    frontier = list(out)
    while frontier:
        nxt = []
        for p in frontier:
            for g in principal:
                r = join(p, g)
                if r not in out:
                    out.add(r)
                    nxt.append(r)
                    if len(out) > cap:
                        raise BudgetExceeded("lattice_size", f"more than {cap} congruences")
        frontier = nxt
    return CongruenceLattice.build(a, [], out)


def hom_kernels(a: FiniteAlgebra, K: Sequence[FiniteAlgebra],
                budget: int | None = None) -> set:
    kernels = set()
    for b in K:
        same_signature(a, b)
        for h in homs(a, b, budget=budget):
            kernels.add(canonical(h.map))
    return kernels


def con_q(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], cap: int | None = None,
          budget: int | None = None) -> CongruenceLattice:
    kernels = hom_kernels(a, K, budget) | {total(a.n)}
    return CongruenceLattice.build(a, [b.name for b in K], meet_closure(kernels, cap))


def cg_q(a: FiniteAlgebra, K: Sequence[FiniteAlgebra], pairs) -> tuple[int, ...]:
    """Least relative congruence containing ``pairs``: meet of the hom kernels containing them."""
    out = total(a.n)
    for p in hom_kernels(a, K):
        if all(p[x] == p[y] for x, y in pairs):
            out = meet(out, p)
    return out


def in_isp(a: FiniteAlgebra, K: Sequence[FiniteAlgebra]) -> bool:
    """Do homomorphisms into members of K separate the points of a?"""
    sep = total(a.n)
    for p in hom_kernels(a, K):
        sep = meet(sep, p)
    return sep == identity(a.n)


# ---------------------------------------------------------------- reports

def q_irreducible(a: FiniteAlgebra, K: Sequence[FiniteAlgebra],
                  lattice: CongruenceLattice | None = None) -> Report:
    with timed() as t:
        inputs = {"algebra": a.name, "K": [b.name for b in K]}
        L = lattice or con_q(a, K)
        if not L.has_identity:
            raise NotAMember(f"{a.name} is not in ISP({', '.join(b.name for b in K)})")
        if a.n < 2:
            return t.stamp(Report("q_irreducible", "no", inputs=inputs, notes=["trivial algebra"]))
        delta = identity(a.n)
        mono = total(a.n)
        for p in L.elements:
            if p != delta:
                mono = meet(mono, p)
        if mono == delta:
            return t.stamp(Report("q_irreducible", "no", inputs=inputs,
                                  witness={"atoms": [list(p) for p in L.atoms()]}))
        pair = min((i, j) for i in range(a.n) for j in range(i + 1, a.n) if mono[i] == mono[j])
        r = Report("q_irreducible", "yes", inputs=inputs,
                   witness={"monolith": list(mono), "pair": list(pair),
                            "pair_labels": [a.labels[pair[0]], a.labels[pair[1]]]},
                   data={"monolith": mono, "pair": pair})
        r.verifier = lambda: (is_congruence(a, mono)
                              and all(leq(mono, p) for p in L.elements if p != delta))
        return t.stamp(r)


def max_separating_congruence(a: FiniteAlgebra, sub: Sequence[int],
                              K: Sequence[FiniteAlgebra]) -> tuple[int, ...]:
    """A maximal relative congruence trivial on ``sub``; least such partition on ties."""
    L = con_q(a, K)
    sub = sorted(set(sub))
    good = [p for p in L.elements if len(set(p[i] for i in sub)) == len(sub)]
    if not good:
        raise QuasilabError("no separating Q-congruence")
    maximal = [p for p in good if not any(q != p and leq(p, q) for q in good)]
    return min(maximal)


def gamma_pseudocomplement(a: FiniteAlgebra, K: Sequence[FiniteAlgebra],
                           pair: tuple[int, int],
                           lattice: CongruenceLattice | None = None) -> tuple[int, ...]:
    """Meet of the meet-irreducible relative congruences omitting ``pair``."""
    L = lattice or con_q(a, K)
    if L.is_distributive() is not None:
        raise QuasilabError("not relatively congruence distributive")
    x, y = pair
    gamma = total(a.n)
    for p in L.meet_irreducible():
        if p[x] != p[y]:
            gamma = meet(gamma, p)
    principal = L.least_containing([pair])
    bottom = L.bottom
    if meet(gamma, principal) != bottom:
        raise QuasilabError("not relatively congruence distributive: pseudocomplement check failed")
    for p in L.elements:
        if meet(p, principal) == bottom and not leq(p, gamma):
            raise QuasilabError("not relatively congruence distributive: pseudocomplement check failed")
    return gamma


def induced_by_filter(coords: np.ndarray, S: Sequence[int]) -> tuple[int, ...]:
    """Partition of the rows of ``coords`` induced by the principal filter of S."""
    S = list(S)
    if not S:
        return total(len(coords))
    return canonical(_row_ids(coords[:, S]))


def _row_ids(rows: np.ndarray) -> list[int]:
    ids: dict = {}
    return [ids.setdefault(tuple(r), len(ids)) for r in rows.tolist()]


def is_filtral(factors: Sequence[FiniteAlgebra], theta: Sequence[int],
               coords: np.ndarray | None = None) -> Report:
    """Is ``theta`` induced by a filter on the index set of the factors?

    ``coords`` lists the elements of the subdirect product as coordinate rows;
    the default is the full direct product in mixed-radix order.  The improper
    filter (all subsets) is allowed and induces the total relation.
    """
    with timed() as t:
        k = len(factors)
        if k > 5:
            raise QuasilabError("at most 5 factors")
        coords = product_coords(factors) if coords is None else np.asarray(coords)
        for i, f in enumerate(factors):
            if len(set(coords[:, i].tolist())) != f.n:
                raise QuasilabError("not a subdirect product: projection not onto")
        theta = canonical(theta)
        inputs = {"factors": [f.name for f in factors], "theta": list(theta)}
        subsets = [S for r in range(k, -1, -1) for S in combinations(range(k), r)]
        for S in subsets:
            if induced_by_filter(coords, S) == theta:
                r = Report("is_filtral", "yes", inputs=inputs,
                           witness={"filter_generator": list(S), "improper": not S},
                           notes=["filters on a finite index set are principal; the improper filter is allowed"])
                r.verifier = lambda S=S: induced_by_filter(coords, S) == theta
                return t.stamp(r)
        return t.stamp(Report("is_filtral", "no", inputs=inputs,
                              witness={"filters_checked": len(subsets)},
                              notes=["the improper filter is allowed"]))


def compose(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    return (r.astype(np.int64) @ s.astype(np.int64)) > 0


def three_permute(a: FiniteAlgebra, K: Sequence[FiniteAlgebra] | None = None,
                  lattice: CongruenceLattice | None = None) -> Report:
    """theta v phi = theta o phi o theta for all members of the (relative) lattice."""
    with timed() as t:
        L = lattice or (con_q(a, K) if K else con_all(a))
        inputs = {"algebra": a.name, "K": L.generators}
        for p, q in combinations(L.elements, 2):
            P, Q = relation_matrix(p), relation_matrix(q)
            j = relation_matrix(L.ljoin(p, q))
            if not np.array_equal(j, compose(compose(P, Q), P)) or \
                    not np.array_equal(j, compose(compose(Q, P), Q)):
                return t.stamp(Report("three_permute", "no", inputs=inputs,
                                      witness={"theta": list(p), "phi": list(q)}))
        return t.stamp(Report("three_permute", "yes", inputs=inputs,
                              witness={"lattice_size": len(L)}))
