"""Independent brute-force reference implementations.

Everything here works on plain Python tuples and loops over the full search
space.  Nothing is shared with the library beyond reading operation tables.
"""
from __future__ import annotations

from itertools import combinations, permutations, product


def op_items(a):
    """(name, arity, dict from argument tuple to value) per operation."""
    out = []
    for name, ar in a.sig.ops:
        t = a.tables[name]
        out.append((name, ar, {args: int(t[args]) for args in product(range(a.n), repeat=ar)}))
    return out


def eval_term(t, a, values):
    if t.is_var:
        return values[t.var]
    args = tuple(eval_term(s, a, values) for s in t.args)
    return int(a.tables[t.op][args])


def holds(a, q):
    for vals in product(range(a.n), repeat=q.nvars):
        if all(eval_term(s, a, vals) == eval_term(t, a, vals) for s, t in q.premises):
            s, t = q.conclusion
            if eval_term(s, a, vals) != eval_term(t, a, vals):
                return False
    return True


def is_hom(a, b, m, items_a=None):
    for name, ar, table in items_a or op_items(a):
        tb = b.tables[name]
        for args, v in table.items():
            if m[v] != int(tb[tuple(m[x] for x in args)]):
                return False
    return True


def homs(a, b):
    items = op_items(a)
    return [m for m in product(range(b.n), repeat=a.n) if is_hom(a, b, m, items)]


def isomorphic(a, b):
    if a.n != b.n:
        return False
    items = op_items(a)
    return any(is_hom(a, b, p, items) for p in permutations(range(b.n)))


def set_partitions(n):
    """Restricted growth strings of length n."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            yield from rec(prefix + [b], max(top, b))
    if n == 0:
        yield ()
        return
    yield from rec([0], 0)


def canon(p):
    seen = {}
    return tuple(seen.setdefault(x, len(seen)) for x in p)


def is_congruence(a, p, items=None):
    for name, ar, table in items or op_items(a):
        for args in table:
            for args2 in product(range(a.n), repeat=ar):
                if all(p[x] == p[y] for x, y in zip(args, args2)):
                    if p[table[args]] != p[table[args2]]:
                        return False
    return True


def congruences(a):
    items = op_items(a)
    return {p for p in set_partitions(a.n) if is_congruence(a, p, items)}


def kernel(m):
    return canon(m)


def meet(p, q):
    return canon(list(zip(p, q)))


def relative_congruences(a, K):
    """Congruences that are intersections of kernels of maps into members of K."""
    kers = {kernel(m) for b in K for m in homs(a, b)}
    out = set()
    for theta in congruences(a):
        above = [k for k in kers if all(k[x] == k[y] for x in range(a.n) for y in range(a.n)
                                          if theta[x] == theta[y])]
        m = tuple([0] * a.n)
        for k in above:
            m = meet(m, k)
        if m == theta:
            out.add(theta)
    return out


def subuniverses(a):
    items = op_items(a)
    out = []
    for r in range(1, a.n + 1):
        for s in combinations(range(a.n), r):
            ss = set(s)
            if all(v in ss for _, _, t in items for args, v in t.items()
                   if all(x in ss for x in args)):
                out.append(s)
    return out


def generated(a, seeds):
    items = op_items(a)
    s = set(seeds)
    while True:
        new = {v for _, _, t in items for args, v in t.items() if all(x in s for x in args)} - s
        if not new:
            return s
        s |= new


def mingens_size(a):
    for r in range(0, a.n + 1):
        for g in combinations(range(a.n), r):
            if len(generated(a, g)) == a.n:
                return r
    return a.n


def free_vectors(K, n):
    """F_Q(n) as the set of term tables, closed naively."""
    coords = [(i, assign) for i, b in enumerate(K) for assign in product(range(b.n), repeat=n)]
    gens = {tuple(assign[j] for _, assign in coords) for j in range(n)}
    ops = K[0].sig.ops
    elems = set(gens)
    while True:
        new = set()
        cur = list(elems)
        for name, ar in ops:
            for args in product(cur, repeat=ar):
                v = tuple(int(K[i].tables[name][tuple(x[c] for x in args)])
                          for c, (i, _) in enumerate(coords))
                if v not in elems:
                    new.add(v)
        if not new:
            return elems
        elems |= new


def clone_tables(a, k):
    return free_vectors([a], k)


def free_as_algebra(K, n):
    """F_Q(n) as a FiniteAlgebra built from the naive closure."""
    import numpy as np
    from quasilab.kernel import FiniteAlgebra
    coords = [(i, assign) for i, b in enumerate(K) for assign in product(range(b.n), repeat=n)]
    elems = sorted(free_vectors(K, n))
    pos = {v: k for k, v in enumerate(elems)}
    tables = {}
    for name, ar in K[0].sig.ops:
        t = np.zeros((len(elems),) * ar, dtype=np.int32)
        for args in product(range(len(elems)), repeat=ar):
            v = tuple(int(K[i].tables[name][tuple(elems[x][c] for x in args)])
                      for c, (i, _) in enumerate(coords))
            t[args] = pos[v]
        tables[name] = t
    return FiniteAlgebra(f"free{n}", K[0].sig, [f"e{k}" for k in range(len(elems))], tables)


def separated(a, b):
    """Every pair of distinct elements of a is split by some hom a -> b."""
    hs = homs(a, b)
    return all(any(m[x] != m[y] for m in hs) for x, y in combinations(range(a.n), 2))
