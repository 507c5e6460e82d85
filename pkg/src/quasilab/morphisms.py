"""Homomorphism search and the basic constructions on finite algebras.

Homomorphisms are found by backtracking over images of a minimum generating
set of the source.  The source is split into levels: level ``j`` holds the
elements generated by the first ``j`` generators (level 0 by the constants
alone).  Once the image of generator ``j`` is chosen, the images of the new
level are forced, and every table entry whose arguments all lie in the level
is checked before descending.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product as iproduct
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, QuasilabError
from .kernel import FiniteAlgebra, Signature
from .report import Report, timed

DEFAULT_NODE_BUDGET = 2_000_000
SUBALGEBRA_LIMIT = 16


@dataclass(frozen=True)
class Homomorphism:
    src: FiniteAlgebra
    dst: FiniteAlgebra
    map: tuple[int, ...]

    def __call__(self, x: int) -> int:
        return self.map[x]

    def is_compatible(self) -> bool:
        return is_homomorphism(self.src, self.dst, self.map)

    def kernel(self) -> np.ndarray:
        return kernel_of(self.map)

    @property
    def injective(self) -> bool:
        return len(set(self.map)) == len(self.map)

    @property
    def surjective(self) -> bool:
        return len(set(self.map)) == self.dst.n

    def to_json(self) -> dict:
        return {"map": list(self.map)}


def is_homomorphism(a: FiniteAlgebra, b: FiniteAlgebra, m: Sequence[int]) -> bool:
    """Exhaustive compatibility check of ``m`` against every table entry."""
    m = np.asarray(m, dtype=np.int64)
    if m.shape != (a.n,) or (m.size and (m.min() < 0 or m.max() >= b.n)):
        return False
    for name, ar in a.sig.ops:
        ta, tb = a.tables[name], b.tables[name]
        if ar == 0:
            if m[ta[()]] != tb[()]:
                return False
            continue
        grid = np.indices((a.n,) * ar)
        if not np.array_equal(m[ta], tb[tuple(m[g] for g in grid)]):
            return False
    return True


def kernel_of(m: Sequence[int]) -> np.ndarray:
    """Block-id array (least member of each block) of the kernel of a map."""
    m = np.asarray(m)
    first: dict[int, int] = {}
    out = np.empty(len(m), dtype=np.int64)
    for i, v in enumerate(m.tolist()):
        out[i] = first.setdefault(v, i)
    return out


def same_signature(a: FiniteAlgebra, b: FiniteAlgebra) -> None:
    if a.sig != b.sig:
        raise QuasilabError(f"signature mismatch: {a.name} [{a.sig}] vs {b.name} [{b.sig}]")


# ---------------------------------------------------------------- closure

def generated_subalgebra(a: FiniteAlgebra, seeds: Sequence[int]) -> list[int]:
    """Sorted carrier of the subalgebra generated by ``seeds`` (constants included)."""
    inside = np.zeros(a.n, dtype=bool)
    inside[list(seeds)] = True
    for name, ar in a.sig.ops:
        if ar == 0:
            inside[a.tables[name][()]] = True
    while True:
        idx = np.flatnonzero(inside)
        grown = inside.copy()
        for name, ar in a.sig.ops:
            if ar:
                grown[a.tables[name][np.ix_(*([idx] * ar))].reshape(-1)] = True
        if grown.sum() == inside.sum():
            return idx.tolist()
        inside = grown


def _closure_order(a: FiniteAlgebra, seeds: tuple[int, ...], start: Sequence[int] = ()):
    """Elements of <start + seeds> in generation order, with provenance.

    Generation order: ``start`` as given, then the seeds, then constants, then
    repeated sweeps over ops in signature order and argument tuples in
    lexicographic order of position in the list.
    """
    order = list(dict.fromkeys(list(start)))
    prov = {x: ("start",) for x in order}
    for j, s in enumerate(seeds):
        if s not in prov:
            prov[s] = ("gen", j)
            order.append(s)
    for name, ar in a.sig.ops:
        if ar == 0:
            c = int(a.tables[name][()])
            if c not in prov:
                prov[c] = (name, ())
                order.append(c)
    done = 0
    while True:
        size = len(order)
        if size == done:
            break
        for name, ar in a.sig.ops:
            if ar == 0:
                continue
            t = a.tables[name]
            for args in iproduct(range(len(order)), repeat=ar):
                if max(args) < done:
                    continue
                v = int(t[tuple(order[i] for i in args)])
                if v not in prov:
                    prov[v] = (name, tuple(order[i] for i in args))
                    order.append(v)
        done = size
    return order, prov


def is_subuniverse(a: FiniteAlgebra, subset) -> bool:
    s = np.zeros(a.n, dtype=bool)
    s[list(subset)] = True
    if not s.any():
        return False
    idx = np.flatnonzero(s)
    for name, ar in a.sig.ops:
        t = a.tables[name]
        if ar == 0:
            if not s[t[()]]:
                return False
        elif not s[t[np.ix_(*([idx] * ar))]].all():
            return False
    return True


_mingens_cache: dict[bytes, tuple[int, ...]] = {}


def mingens(a: FiniteAlgebra) -> tuple[int, ...]:
    """Lexicographically least generating set of minimum size."""
    key = a.key()
    if key not in _mingens_cache:
        _mingens_cache[key] = _search_mingens(a)
    return _mingens_cache[key]


def _search_mingens(a: FiniteAlgebra) -> tuple[int, ...]:
    for k in range(a.n + 1):
        for sub in combinations(range(a.n), k):
            if len(generated_subalgebra(a, sub)) == a.n:
                return sub
    raise AssertionError("unreachable")


# ---------------------------------------------------------------- hom search

class _Plan:
    """Level structure of a source algebra for a fixed generator tuple."""

    def __init__(self, a: FiniteAlgebra, gens: tuple[int, ...]):
        self.a = a
        self.gens = gens
        inside = np.zeros(a.n, dtype=bool)
        levels = []        # per level: list of (elem, provenance)
        checks = []        # per level: list of (op, args array (k, ar), results (k,))
        members: list[int] = []
        prev: list[int] = []
        for j in range(len(gens) + 1):
            seeds = gens[:j]
            order, prov = _closure_order(a, seeds, prev)
            new = [x for x in order if not inside[x]]
            levels.append([(x, prov[x]) for x in new])
            inside[new] = True
            members = order
            idx = np.array(sorted(members), dtype=np.int64)
            lvl_new = np.zeros(a.n, dtype=bool)
            lvl_new[new] = True
            chk = []
            for name, ar in a.sig.ops:
                t = a.tables[name]
                if ar == 0:
                    if j == 0:
                        chk.append((name, np.zeros((1, 0), dtype=np.int64), np.array([t[()]])))
                    continue
                grid = np.array(list(iproduct(idx.tolist(), repeat=ar)), dtype=np.int64).reshape(-1, ar)
                keep = lvl_new[grid].any(axis=1)
                grid = grid[keep]
                res = t[tuple(grid.T)] if len(grid) else np.zeros(0, dtype=np.int64)
                chk.append((name, grid, np.asarray(res, dtype=np.int64)))
            checks.append(chk)
            prev = order
        if not inside.all():
            raise QuasilabError("generator tuple does not generate the algebra")
        self.levels = levels
        self.checks = checks


_plans: dict = {}


def _plan_for(a: FiniteAlgebra, gens: tuple[int, ...] | None = None) -> _Plan:
    gens = mingens(a) if gens is None else tuple(gens)
    key = (a.key(), gens)
    plan = _plans.get(key)
    if plan is None or plan.a.sig != a.sig:
        plan = _Plan(a, gens)
        if len(_plans) > 512:
            _plans.clear()
        _plans[key] = plan
    return plan


def homs(a: FiniteAlgebra, b: FiniteAlgebra, filter: str = "all",
         pair: tuple[int, int] | None = None,
         domains: dict[int, Sequence[int]] | None = None,
         budget: int | None = None) -> Iterator[Homomorphism]:
    """Stream homomorphisms a -> b in lexicographic order of generator images.

    ``filter`` is one of all/surjective/injective/separating; "separating"
    needs ``pair`` and keeps maps that send its two elements apart.
    ``domains`` restricts the images of individual source elements.
    Raises BudgetExceeded when more than ``budget`` search nodes are visited.
    """
    if budget is None:
        budget = DEFAULT_NODE_BUDGET
    same_signature(a, b)
    if filter not in ("all", "surjective", "injective", "separating"):
        raise QuasilabError(f"unknown filter {filter!r}")
    if filter == "separating" and pair is None:
        raise QuasilabError("separating filter needs a pair")
    if filter == "injective" and a.n > b.n:
        return
    if filter == "surjective" and a.n < b.n:
        return
    plan = _plan_for(a)
    allowed = None
    if domains:
        allowed = np.ones((a.n, b.n), dtype=bool)
        for x, vals in domains.items():
            allowed[x] = False
            allowed[x, list(vals)] = True
    m = np.full(a.n, -1, dtype=np.int64)
    nodes = [0]
    injective = filter == "injective"

    def assign_level(j) -> bool:
        for x, prov in plan.levels[j]:
            tag = prov[0]
            if tag == "gen":
                continue
            if prov[1] == ():
                v = int(b.tables[tag][()])
            else:
                v = int(b.tables[tag][tuple(m[y] for y in prov[1])])
            if allowed is not None and not allowed[x, v]:
                return False
            m[x] = v
        for name, args, res in plan.checks[j]:
            if args.shape[1] == 0:
                if m[res[0]] != b.tables[name][()]:
                    return False
                continue
            if len(res) and not np.array_equal(m[res], b.tables[name][tuple(m[args].T)]):
                return False
        if injective:
            assigned = m[m >= 0]
            if len(np.unique(assigned)) != len(assigned):
                return False
        return True

    def rec(j):
        nodes[0] += 1
        if nodes[0] > budget:
            raise BudgetExceeded("hom_nodes", f"more than {budget} search nodes for {a.name} -> {b.name}")
        if not assign_level(j):
            return
        if j == len(plan.gens):
            mp = tuple(int(v) for v in m)
            if filter == "surjective" and len(set(mp)) != b.n:
                return
            if filter == "separating" and mp[pair[0]] == mp[pair[1]]:
                return
            yield Homomorphism(a, b, mp)
            return
        g = plan.gens[j]
        cands = range(b.n) if allowed is None else np.flatnonzero(allowed[g]).tolist()
        saved = m.copy()
        for v in cands:
            m[g] = v
            yield from rec(j + 1)
            m[:] = saved

    yield from rec(0)


def first_hom(a, b, filter="all", pair=None, domains=None,
              budget: int | None = None) -> Homomorphism | None:
    for h in homs(a, b, filter, pair, domains, budget):
        return h
    return None


def all_homs(a, b, filter="all", budget: int | None = None) -> list[Homomorphism]:
    return list(homs(a, b, filter, budget=budget))


# ---------------------------------------------------------------- reports

def _hom_report(question, inputs, found, *, what="map") -> Report:
    if found is None:
        return Report(question, "no", inputs=inputs)
    return Report(question, "yes", witness={what: list(found.map)}, inputs=inputs,
                  data={"hom": found}, verifier=found.is_compatible)


def embeds(b: FiniteAlgebra, a: FiniteAlgebra, budget: int | None = None) -> Report:
    """Is ``b`` isomorphic to a subalgebra of ``a``?"""
    with timed() as t:
        inputs = {"b": b.name, "a": a.name}
        if b.n > a.n:
            return t.stamp(Report("embeds", "no", inputs=inputs, notes=["|b| > |a|"]))
        try:
            h = first_hom(b, a, "injective", budget=budget)
        except BudgetExceeded as e:
            return t.stamp(Report("embeds", "unknown", inputs=inputs, budget=e.cap))
        r = _hom_report("embeds", inputs, h)
        if h is not None:
            r.verifier = lambda: h.is_compatible() and h.injective
        return t.stamp(r)


def invariant(a: FiniteAlgebra) -> tuple:
    """Isomorphism invariant: per-op value histograms, fixed points, unary cycle types."""
    parts = [a.n]
    for name, ar in a.sig.ops:
        t = a.tables[name]
        if ar == 0:
            continue
        hist = np.bincount(t.reshape(-1), minlength=a.n)
        diag = t[tuple([np.arange(a.n)] * ar)]
        fixed = np.bincount(diag, minlength=a.n)
        pairs = sorted(zip(hist.tolist(), fixed.tolist(), (diag == np.arange(a.n)).tolist()))
        parts.append((name, tuple(pairs)))
        if ar == 1:
            parts.append(("cycles", _cycle_type(t)))
    return tuple(parts)


def _cycle_type(f: np.ndarray) -> tuple:
    # for each element: (tail length, cycle length)
    out = []
    for x in range(len(f)):
        seen = {}
        y, k = x, 0
        while y not in seen:
            seen[y] = k
            y = int(f[y])
            k += 1
        out.append((seen[y], k - seen[y]))
    return tuple(sorted(out))


def isomorphic(a: FiniteAlgebra, b: FiniteAlgebra, budget: int | None = None) -> Report:
    with timed() as t:
        inputs = {"a": a.name, "b": b.name}
        same_signature(a, b)
        if a.n != b.n or invariant(a) != invariant(b):
            return t.stamp(Report("isomorphic", "no", inputs=inputs, notes=["invariants differ"]))
        try:
            h = first_hom(a, b, "injective", budget=budget)
        except BudgetExceeded as e:
            return t.stamp(Report("isomorphic", "unknown", inputs=inputs, budget=e.cap))
        r = _hom_report("isomorphic", inputs, h)
        if h is not None:
            r.verifier = lambda: h.is_compatible() and h.injective and h.surjective
        return t.stamp(r)


_canon_cache: dict[bytes, bytes] = {}


def canonical_form(a: FiniteAlgebra) -> bytes:
    """Lexicographically least table encoding over all relabelings induced by
    ordered minimum generating tuples (closure order is isomorphism-equivariant)."""
    key = a.key()
    if key not in _canon_cache:
        _canon_cache[key] = _canonical_form(a)
    return _canon_cache[key]


def _canonical_form(a: FiniteAlgebra) -> bytes:
    k = len(mingens(a))
    best = None
    for tup in iproduct(range(a.n), repeat=k):
        if len(set(tup)) < k or len(generated_subalgebra(a, tup)) < a.n:
            continue
        order, _ = _closure_order(a, tup)
        if len(order) != a.n:
            continue
        perm = np.empty(a.n, dtype=np.int64)
        perm[order] = np.arange(a.n)
        enc = a.permuted(perm).key()
        if best is None or enc < best:
            best = enc
    return best


def retracts(a: FiniteAlgebra, b: FiniteAlgebra, budget: int | None = None) -> Report:
    """Is ``b`` a retract of ``a``: g: a ->> b, h: b >-> a with g o h = id_b."""
    with timed() as t:
        inputs = {"a": a.name, "onto": b.name}
        try:
            for h in homs(b, a, "injective", budget=budget):
                dom = {h.map[y]: [y] for y in range(b.n)}
                g = first_hom(a, b, "all", domains=dom, budget=budget)
                if g is not None:
                    r = Report("retracts", "yes", inputs=inputs,
                               witness={"surjection": list(g.map), "section": list(h.map)},
                               data={"g": g, "h": h})
                    r.verifier = lambda g=g, h=h: (g.is_compatible() and h.is_compatible()
                                                   and all(g.map[h.map[y]] == y for y in range(b.n)))
                    return t.stamp(r)
        except BudgetExceeded as e:
            return t.stamp(Report("retracts", "unknown", inputs=inputs, budget=e.cap))
        return t.stamp(Report("retracts", "no", inputs=inputs))


# ---------------------------------------------------------------- constructions

def subalgebra(a: FiniteAlgebra, carrier: Sequence[int], name: str | None = None) -> FiniteAlgebra:
    carrier = sorted(set(int(x) for x in carrier))
    if not is_subuniverse(a, carrier):
        raise QuasilabError("not a subuniverse")
    pos = np.full(a.n, -1, dtype=np.int64)
    pos[carrier] = np.arange(len(carrier))
    idx = np.array(carrier)
    tables = {}
    for nm, ar in a.sig.ops:
        t = a.tables[nm]
        tables[nm] = pos[t[()]] if ar == 0 else pos[t[np.ix_(*([idx] * ar))]]
    return FiniteAlgebra(name or f"{a.name}[{','.join(a.labels[i] for i in carrier)}]",
                         a.sig, [a.labels[i] for i in carrier], tables)


def subuniverses(a: FiniteAlgebra) -> list[tuple[int, ...]]:
    """All nonempty subuniverses, largest first then lexicographic."""
    base = tuple(generated_subalgebra(a, ()))
    found = set()
    frontier = [base] if base else [tuple(generated_subalgebra(a, (x,))) for x in range(a.n)]
    found.update(frontier)
    while frontier:
        nxt = []
        for s in frontier:
            ss = set(s)
            for x in range(a.n):
                if x in ss:
                    continue
                u = tuple(generated_subalgebra(a, tuple(s) + (x,)))
                if u not in found:
                    found.add(u)
                    nxt.append(u)
        frontier = nxt
    return sorted(found, key=lambda s: (-len(s), s))


@dataclass
class SubalgebraList:
    parent: FiniteAlgebra
    carriers: list[tuple[int, ...]]
    algebras: list[FiniteAlgebra]

    @property
    def keys(self) -> list[bytes]:
        """Canonical forms of the representatives (computed on demand)."""
        return [canonical_form(r) for r in self.algebras]

    def __len__(self):
        return len(self.carriers)

    def __iter__(self):
        return iter(self.algebras)


def subalgebras_upto_iso(a: FiniteAlgebra, limit: int | None = None) -> SubalgebraList:
    limit = SUBALGEBRA_LIMIT if limit is None else limit
    if a.n > limit:
        raise BudgetExceeded("subalgebra_limit", f"|{a.name}| = {a.n} > {limit}")
    reps: list[tuple[tuple[int, ...], FiniteAlgebra, tuple]] = []
    for s in subuniverses(a):
        sub = subalgebra(a, s)
        inv = invariant(sub)
        if any(inv == inv2 and isomorphic(sub, r).yes for _, r, inv2 in reps):
            continue
        reps.append((s, sub, inv))
    carriers = [s for s, _, _ in reps]
    algs = [r for _, r, _ in reps]
    return SubalgebraList(a, carriers, algs)


def product(algebras: Sequence[FiniteAlgebra], name: str | None = None,
            cap: int = 100_000) -> FiniteAlgebra:
    """Direct product; element index is mixed radix with the last factor fastest."""
    if not algebras:
        raise QuasilabError("empty product")
    sig = algebras[0].sig
    for b in algebras[1:]:
        same_signature(algebras[0], b)
    sizes = [b.n for b in algebras]
    total = int(np.prod(sizes))
    if total > cap:
        raise BudgetExceeded("product_size", f"{total} elements > {cap}")
    coords = np.array(list(iproduct(*[range(s) for s in sizes])), dtype=np.int64).reshape(total, len(sizes))
    weights = np.array([int(np.prod(sizes[i + 1:])) for i in range(len(sizes))], dtype=np.int64)
    labels = ["(" + ",".join(algebras[i].labels[c] for i, c in enumerate(row)) + ")" for row in coords.tolist()]
    tables = {}
    for nm, ar in sig.ops:
        if ar == 0:
            tables[nm] = int(sum(int(algebras[i].tables[nm][()]) * weights[i] for i in range(len(sizes))))
            continue
        grid = np.indices((total,) * ar).reshape(ar, -1)
        res = np.zeros(grid.shape[1], dtype=np.int64)
        for i, b in enumerate(algebras):
            res += b.tables[nm][tuple(coords[g, i] for g in grid)] * weights[i]
        tables[nm] = res.reshape((total,) * ar)
    return FiniteAlgebra(name or "x".join(b.name for b in algebras), sig, labels, tables)


def product_coords(algebras: Sequence[FiniteAlgebra]) -> np.ndarray:
    sizes = [b.n for b in algebras]
    return np.array(list(iproduct(*[range(s) for s in sizes])), dtype=np.int64).reshape(-1, len(sizes))


def quotient(a: FiniteAlgebra, blocks: Sequence[int], name: str | None = None):
    """Quotient by a congruence given as a block-id array.

    Returns (quotient algebra, surjection map).  Quotient elements are the
    blocks ordered by least member.
    """
    blocks = np.asarray(blocks, dtype=np.int64)
    reps = sorted(set(blocks.tolist()))
    pos = {r: i for i, r in enumerate(reps)}
    surj = np.array([pos[int(x)] for x in blocks], dtype=np.int64)
    rep_idx = np.array(reps, dtype=np.int64)
    tables = {}
    for nm, ar in a.sig.ops:
        t = a.tables[nm]
        if ar == 0:
            tables[nm] = surj[t[()]]
            continue
        tables[nm] = surj[t[np.ix_(*([rep_idx] * ar))]]
        # compatibility: every tuple must land in the block predicted by representatives
        grid = np.indices((a.n,) * ar)
        if not np.array_equal(surj[t], tables[nm][tuple(surj[g] for g in grid)]):
            raise QuasilabError("partition is not a congruence")
    q = FiniteAlgebra(name or f"{a.name}/theta", a.sig, [a.labels[r] for r in reps], tables)
    return q, surj


def trivial_algebra(sig: Signature, name: str = "trivial") -> FiniteAlgebra:
    return FiniteAlgebra(name, sig, ["*"], {nm: np.zeros((1,) * ar, dtype=np.int32) for nm, ar in sig.ops})
