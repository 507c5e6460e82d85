"""Subalgebra generation inside a finite direct product.

Elements are vectors indexed by coordinates; coordinate ``c`` lives in
``algebras[coord_alg[c]]``.  Runs of coordinates over the same algebra are
packed into chunks whose codes index precomputed per-op lookup tables, so one
op application costs one lookup per chunk instead of one per coordinate.

Closure order: the seeds, then the constants in signature order, then for each
element ``i`` in turn and each op in signature order, every argument tuple over
``0..i`` containing ``i``.  Each element remembers the application that first
produced it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .kernel import FiniteAlgebra

TABLE_LIMIT = 1 << 20
# chunk lookups allowed per closure; wide products give up early instead of stalling
WORK_LIMIT = 30_000_000_000


@dataclass
class Closure:
    vectors: np.ndarray          # (N, m) element indices per coordinate
    prov_op: np.ndarray          # (N,) -1 seed, else op index in signature
    prov_args: np.ndarray        # (N, maxarity) argument element ids / seed id
    truncated: bool
    op_names: list[str]
    work: int = 0                # chunk lookups spent


class _Layout:
    def __init__(self, algebras: list[FiniteAlgebra], coord_alg: np.ndarray, max_arity: int):
        self.algebras = algebras
        self.coord_alg = coord_alg
        chunks = []   # (algebra index, start, length)
        m = len(coord_alg)
        start = 0
        while start < m:
            a = int(coord_alg[start])
            end = start
            while end < m and coord_alg[end] == a:
                end += 1
            n = algebras[a].n
            c = 1
            r = max(max_arity, 1)
            while c < end - start and n ** ((c + 1) * r) <= TABLE_LIMIT:
                c += 1
            for s in range(start, end, c):
                chunks.append((a, s, min(c, end - s)))
            start = end
        self.chunks = chunks
        self.radix = np.array([algebras[a].n ** ln for a, _, ln in chunks], dtype=np.int64)

    def encode(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.atleast_2d(vecs)
        out = np.zeros((vecs.shape[0], len(self.chunks)), dtype=np.int32)
        for k, (a, s, ln) in enumerate(self.chunks):
            n = self.algebras[a].n
            code = np.zeros(vecs.shape[0], dtype=np.int64)
            for j in range(ln):
                code = code * n + vecs[:, s + j]
            out[:, k] = code
        return out

    def decode(self, codes: np.ndarray) -> np.ndarray:
        m = len(self.coord_alg)
        out = np.zeros((codes.shape[0], m), dtype=np.int32)
        for k, (a, s, ln) in enumerate(self.chunks):
            n = self.algebras[a].n
            code = codes[:, k].astype(np.int64)
            for j in reversed(range(ln)):
                out[:, s + j] = code % n
                code //= n
        return out

    def op_tables(self, opname: str, arity: int) -> list[np.ndarray]:
        # chunks of equal shape share one table object
        tabs, memo = [], {}
        for a, s, ln in self.chunks:
            if (a, ln) in memo:
                tabs.append(memo[a, ln])
                continue
            alg = self.algebras[a]
            n = alg.n
            V = n ** ln
            digits = np.zeros((V, ln), dtype=np.int32)
            code = np.arange(V)
            for j in reversed(range(ln)):
                digits[:, j] = code % n
                code = code // n
            grid = np.indices((V,) * arity).reshape(arity, -1)
            res = alg.tables[opname][tuple(digits[g] for g in grid)]
            powers = n ** np.arange(ln - 1, -1, -1, dtype=np.int64)
            memo[a, ln] = (res.astype(np.int64) @ powers).astype(np.int32)
            tabs.append(memo[a, ln])
        return tabs


@numba.njit(cache=True)
def _row_key(rows, i, radix, exact):
    if exact:
        key = np.uint64(0)
        for k in range(rows.shape[1]):
            key = key * np.uint64(radix[k]) + np.uint64(rows[i, k])
        return key
    h = np.uint64(1469598103934665603)
    for k in range(rows.shape[1]):
        h = (h ^ np.uint64(rows[i, k])) * np.uint64(1099511628211)
    return h


@numba.njit(cache=True)
def _find(rows, i, key, hidx, hkey, bits, exact):
    """Slot holding a row equal to rows[i], or the empty slot where it goes."""
    mask = (np.int64(1) << bits) - 1
    slot = np.int64((key * np.uint64(11400714819323198485)) >> np.uint64(64 - bits))
    K = rows.shape[1]
    while True:
        j = hidx[slot]
        if j < 0:
            return slot
        if hkey[slot] == key:
            if exact:
                return slot
            same = True
            for k in range(K):
                if rows[j, k] != rows[i, k]:
                    same = False
                    break
            if same:
                return slot
        slot = (slot + 1) & mask


@numba.njit(cache=True)
def _close(rows, n0, cap, arity, comm, toff, radix, tab, prov_op, prov_args, hidx, hkey, bits, exact,
           work_limit):
    K = rows.shape[1]
    work = np.int64(0)
    F = arity.shape[0]
    N = n0
    free = np.zeros(8, dtype=np.int64)
    args = np.zeros(8, dtype=np.int64)
    i = 0
    while i < N:
        for f in range(F):
            r = arity[f]
            for p in range(r):
                if comm[f] and p > 0:
                    break
                nfree = r - 1
                for q in range(nfree):
                    free[q] = 0
                # positions before p take values < i
                if p > 0 and i == 0:
                    continue
                while True:
                    q = 0
                    for pos in range(r):
                        if pos == p:
                            args[pos] = i
                        else:
                            args[pos] = free[q]
                            q += 1
                    work += K + 4
                    if work > work_limit:
                        return N, True, work
                    # apply op f chunkwise into the scratch row N
                    for k in range(K):
                        off = toff[f, k]
                        rk = radix[k]
                        idx = np.int64(0)
                        for pos in range(r):
                            idx = idx * rk + rows[args[pos], k]
                        rows[N, k] = tab[off + idx]
                    key = _row_key(rows, N, radix, exact)
                    slot = _find(rows, N, key, hidx, hkey, bits, exact)
                    if hidx[slot] < 0:
                        if N >= cap:
                            return N, True, work
                        hidx[slot] = N
                        hkey[slot] = key
                        prov_op[N] = f
                        for pos in range(r):
                            prov_args[N, pos] = args[pos]
                        N += 1
                    # advance odometer over the free positions
                    q = nfree - 1
                    while q >= 0:
                        pos = q if q < p else q + 1
                        limit = i if pos < p else i + 1
                        free[q] += 1
                        if free[q] < limit:
                            break
                        free[q] = 0
                        q -= 1
                    if q < 0:
                        break
        i += 1
    return N, False, work


def generate(algebras: list[FiniteAlgebra], coord_alg, seeds, cap: int) -> Closure:
    """Close ``seeds`` (rows of element indices) under all ops of the signature."""
    sig = algebras[0].sig
    coord_alg = np.asarray(coord_alg, dtype=np.int64)
    m = len(coord_alg)
    seeds = np.asarray(seeds, dtype=np.int32).reshape(-1, m)
    ops = [(name, ar) for name, ar in sig.ops if ar > 0]
    max_arity = max([ar for _, ar in ops], default=1)
    if max_arity > 8:
        raise ValueError("operations of arity > 8 are not supported")
    layout = _Layout(algebras, coord_alg, max_arity)

    # seeds, then constants, deduplicated in order
    consts = []
    for name, ar in sig.ops:
        if ar == 0:
            consts.append(np.array([algebras[a].tables[name][()] for a in coord_alg], dtype=np.int32))
    start_vecs, start_prov = [], []
    seen = set()
    for i, v in enumerate(list(seeds)):
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            start_vecs.append(v)
            start_prov.append((-1, i))
    op_index = {name: i for i, (name, _) in enumerate(sig.ops)}
    for (name, ar) in [(n, a) for n, a in sig.ops if a == 0]:
        v = consts.pop(0)
        key = v.tobytes()
        if key not in seen:
            seen.add(key)
            start_vecs.append(v)
            start_prov.append((op_index[name], -1))

    K = len(layout.chunks)
    cap = max(cap, len(start_vecs) + 1)
    rows = np.zeros((cap + 1, K), dtype=np.int32)
    n0 = len(start_vecs)
    if n0:
        rows[:n0] = layout.encode(np.array(start_vecs))
    prov_op = np.full(cap + 1, -1, dtype=np.int64)
    prov_args = np.full((cap + 1, max(max_arity, 1)), -1, dtype=np.int64)
    for j, (o, s) in enumerate(start_prov):
        prov_op[j] = o
        prov_args[j, 0] = s

    bits = 1
    while (1 << bits) < 2 * (cap + 1):
        bits += 1
    hidx = np.full(1 << bits, -1, dtype=np.int64)
    hkey = np.zeros(1 << bits, dtype=np.uint64)
    exact = bool(np.sum(np.log2(layout.radix.astype(float))) < 63)
    for j in range(n0):
        key = np.uint64(_row_key(rows, j, layout.radix, exact))
        slot = _find(rows, j, key, hidx, hkey, bits, exact)
        hidx[slot] = j
        hkey[slot] = key

    if ops and n0:
        arity = np.array([ar for _, ar in ops], dtype=np.int64)
        comm = np.array([_commutative(algebras, name, ar) for name, ar in ops], dtype=np.bool_)
        chunks_tabs = [layout.op_tables(name, ar) for name, ar in ops]
        toff = np.zeros((len(ops), K), dtype=np.int64)
        flat, off, placed = [], 0, {}
        for f, tabs in enumerate(chunks_tabs):
            for k, t in enumerate(tabs):
                if id(t) not in placed:
                    placed[id(t)] = off
                    flat.append(t)
                    off += len(t)
                toff[f, k] = placed[id(t)]
        tab = np.concatenate(flat).astype(np.int32)
        N, truncated, work = _close(rows, n0, cap, arity, comm, toff, layout.radix, tab,
                              prov_op, prov_args, hidx, hkey, bits, exact,
                              np.int64(WORK_LIMIT))
        # op indices inside the kernel count only non-nullary ops
        local = [op_index[name] for name, _ in ops]
        sel = prov_op[n0:N] >= 0
        mapped = prov_op[n0:N].copy()
        mapped[sel] = np.array(local)[prov_op[n0:N][sel]]
        prov_op[n0:N] = mapped
    else:
        N, truncated, work = n0, False, 0
    vectors = layout.decode(rows[:N])
    return Closure(vectors, prov_op[:N].copy(), prov_args[:N].copy(), bool(truncated), sig.names,
                   int(work))


def _commutative(algebras, name, arity) -> bool:
    if arity != 2:
        return False
    return all(np.array_equal(a.tables[name], a.tables[name].T) for a in algebras)
