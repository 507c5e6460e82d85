"""Free algebras F_Q(n) of Q = Q(K) for a finite class K of finite algebras.

F_Q(n) is the subalgebra of the product of all B^(B^n), B in K, generated by
the n projections.  Coordinates are listed member by member, assignments in
lexicographic order, so the coordinate block of B is exactly the flattened
term table of a term over B.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from . import closure
from .closure import generate
from .congruence import canonical
from .errors import BudgetExceeded, QuasilabError, Truncated
from .kernel import App, FiniteAlgebra, Term, Var, print_algebra, term_table
from .morphisms import Homomorphism, is_homomorphism, same_signature, trivial_algebra

DEFAULT_SIZE_CAP = 20_000
# largest number of table cells materialized for a vector algebra
MATERIALIZE_CAP = 20_000_000


class VectorSpace:
    """Lookup of vectors (rows over fixed coordinates) to element indices."""

    def __init__(self, vectors: np.ndarray, radices: np.ndarray):
        self.vectors = vectors
        bits = float(np.sum(np.log2(np.maximum(radices, 2))))
        self.packed = bits < 62
        if self.packed:
            self.weights = np.ones(len(radices), dtype=np.int64)
            for i in range(len(radices) - 2, -1, -1):
                self.weights[i] = self.weights[i + 1] * int(radices[i + 1])
            keys = vectors.astype(np.int64) @ self.weights
            self.order = np.argsort(keys, kind="stable")
            self.sorted_keys = keys[self.order]
        else:
            self.table = {row.tobytes(): i for i, row in enumerate(vectors)}

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Indices of ``rows``; -1 for rows that are not present."""
        rows = np.ascontiguousarray(rows, dtype=self.vectors.dtype)
        if self.packed:
            keys = rows.astype(np.int64) @ self.weights
            pos = np.searchsorted(self.sorted_keys, keys)
            pos = np.minimum(pos, len(self.sorted_keys) - 1)
            hit = self.sorted_keys[pos] == keys
            return np.where(hit, self.order[pos], -1)
        return np.array([self.table.get(r.tobytes(), -1) for r in rows], dtype=np.int64)


def apply_vectors(K: Sequence[FiniteAlgebra], coord_alg: np.ndarray, op: str,
                  args: Sequence[np.ndarray]) -> np.ndarray:
    """Coordinatewise application of ``op`` to stacks of vectors."""
    if not args:
        return np.array([K[a].tables[op][()] for a in coord_alg], dtype=np.int32)
    out = np.empty(np.broadcast_shapes(*[x.shape for x in args]), dtype=np.int32)
    for ai in np.unique(coord_alg):
        cols = np.flatnonzero(coord_alg == ai)
        out[..., cols] = K[ai].tables[op][tuple(x[..., cols] for x in args)]
    return out


def vector_algebra(name: str, K: Sequence[FiniteAlgebra], coord_alg: np.ndarray,
                   vectors: np.ndarray, labels: Sequence[str] | None = None,
                   cap: int | None = None) -> FiniteAlgebra:
    """Materialize a set of vectors closed under the ops as a FiniteAlgebra."""
    cap = MATERIALIZE_CAP if cap is None else cap
    sig = K[0].sig
    N = len(vectors)
    cells = sum(N ** ar for _, ar in sig.ops)
    if cells > cap:
        raise BudgetExceeded("materialize", f"{cells} table cells > {cap}")
    space = VectorSpace(vectors, np.array([K[a].n for a in coord_alg]))
    tables = {}
    for op, ar in sig.ops:
        if ar == 0:
            idx = space.lookup(apply_vectors(K, coord_alg, op, [])[None, :])
        else:
            grid = np.indices((N,) * ar).reshape(ar, -1)
            idx = np.empty(grid.shape[1], dtype=np.int64)
            step = max(1, 2_000_000 // max(1, vectors.shape[1]))
            for s in range(0, grid.shape[1], step):
                res = apply_vectors(K, coord_alg, op, [vectors[g[s:s + step]] for g in grid])
                idx[s:s + step] = space.lookup(res)
        if (idx < 0).any():
            raise QuasilabError("vector set is not closed under the operations")
        tables[op] = idx.reshape((N,) * ar)
    labels = labels or [f"e{i}" for i in range(N)]
    return FiniteAlgebra(name, sig, labels, tables)


@dataclass
class FreeAlgebra:
    K: list[FiniteAlgebra]
    n: int
    coords: list[tuple[int, tuple[int, ...]]]
    coord_alg: np.ndarray
    vectors: np.ndarray
    prov_op: np.ndarray = field(repr=False)
    prov_args: np.ndarray = field(repr=False)
    truncated: bool = False

    def __post_init__(self):
        self._witness: list[Term] | None = None
        self._space: VectorSpace | None = None
        self._algebra: FiniteAlgebra | None = None

    @property
    def size(self) -> int:
        return len(self.vectors)

    def __len__(self):
        return self.size

    @property
    def sig(self):
        return self.K[0].sig

    @property
    def name(self) -> str:
        return f"F({','.join(b.name for b in self.K)};{self.n})"

    def require_complete(self):
        if self.truncated:
            raise Truncated(f"{self.name} stopped at {self.size} elements (size or work cap)")

    @property
    def space(self) -> VectorSpace:
        if self._space is None:
            self._space = VectorSpace(self.vectors, np.array([self.K[a].n for a in self.coord_alg]))
        return self._space

    def witnesses(self) -> list[Term]:
        """Witness term of every element: the application that first produced it."""
        if self._witness is None:
            ops = self.sig.names
            out: list[Term] = []
            for e in range(self.size):
                o = int(self.prov_op[e])
                if o < 0:
                    out.append(Var(int(self.prov_args[e, 0])))
                else:
                    ar = self.sig.ops[o][1]
                    out.append(App(ops[o], *(out[int(x)] for x in self.prov_args[e, :ar])))
            self._witness = out
        return self._witness

    def witness(self, e: int) -> Term:
        return self.witnesses()[e]

    @property
    def generators(self) -> list[int]:
        return [self.index_of(self.projection(i)) for i in range(self.n)]

    def projection(self, i: int) -> np.ndarray:
        return np.array([assign[i] for _, assign in self.coords], dtype=np.int32)

    def index_of(self, vector) -> int:
        i = int(self.space.lookup(np.asarray(vector)[None, :])[0])
        if i < 0:
            raise QuasilabError("vector is not an element of the free algebra")
        return i

    def term_vector(self, t: Term) -> np.ndarray:
        if t.nvars() > self.n:
            raise QuasilabError(f"term uses {t.nvars()} variables, free rank is {self.n}")
        parts = [np.asarray(term_table(t, b, self.n)).reshape(-1) for b in self.K]
        return np.concatenate(parts).astype(np.int32)

    def element(self, t: Term) -> int:
        return self.index_of(self.term_vector(t))

    def apply(self, op: str, *elements: int) -> int:
        v = apply_vectors(self.K, self.coord_alg, op, [self.vectors[e] for e in elements])
        return self.index_of(v)

    def algebra(self, cap: int | None = None) -> FiniteAlgebra:
        """F as a FiniteAlgebra with explicit tables (elements e0, e1, ...)."""
        self.require_complete()
        if self._algebra is None:
            self._algebra = vector_algebra(self.name, self.K, self.coord_alg, self.vectors, cap=cap)
        return self._algebra

    def coordinate_kernels(self) -> list[tuple[int, ...]]:
        """Kernels of all homomorphisms F -> B, B in K (one per coordinate)."""
        return sorted({canonical(self.vectors[:, c]) for c in range(len(self.coords))})

    def export(self) -> tuple[str, str]:
        """(algebra file text, witness sidecar JSON)."""
        safe = re.sub(r"\W+", "_", self.name).strip("_")
        text = print_algebra(self.algebra().rename(safe))
        side = {"K": [b.name for b in self.K], "rank": self.n,
                "witnesses": {f"e{i}": w.to_str([f"x{j}" for j in range(self.n)])
                              for i, w in enumerate(self.witnesses())}}
        return text, json.dumps(side, indent=2)


_free_cache: dict = {}


def free_algebra(K: Sequence[FiniteAlgebra], n: int, size_cap: int | None = None) -> FreeAlgebra:
    size_cap = DEFAULT_SIZE_CAP if size_cap is None else size_cap
    K = list(K)
    if not K:
        raise QuasilabError("empty generator class")
    for b in K[1:]:
        same_signature(K[0], b)
    if all(b.n == 1 for b in K):
        raise QuasilabError("generator class is trivial")
    if n < 0:
        raise QuasilabError("negative rank")
    if n == 0 and not K[0].sig.constants:
        raise QuasilabError("no elements: rank 0 over a signature without constants")
    key = (tuple(b.key() for b in K), n, size_cap, closure.WORK_LIMIT)
    if key in _free_cache:
        return _free_cache[key]
    coords = [(i, assign) for i, b in enumerate(K) for assign in iproduct(range(b.n), repeat=n)]
    coord_alg = np.array([i for i, _ in coords], dtype=np.int64)
    seeds = np.array([[assign[j] for _, assign in coords] for j in range(n)], dtype=np.int32)
    cl = generate(K, coord_alg, seeds.reshape(n, len(coords)), size_cap)
    F = FreeAlgebra(K, n, coords, coord_alg, cl.vectors, cl.prov_op, cl.prov_args, cl.truncated)
    if len(_free_cache) > 64:
        _free_cache.clear()
    _free_cache[key] = F
    return F


def eval_hom(F: FreeAlgebra, target: FiniteAlgebra, images: Sequence[int]) -> Homomorphism:
    """The homomorphism F -> target sending generator i to images[i]."""
    F.require_complete()
    if len(images) != F.n:
        raise QuasilabError(f"need {F.n} images")
    vals = np.empty(F.size, dtype=np.int64)
    ops = F.sig.ops
    for e in range(F.size):
        o = int(F.prov_op[e])
        if o < 0:
            vals[e] = images[int(F.prov_args[e, 0])]
        else:
            name, ar = ops[o]
            vals[e] = target.tables[name][tuple(int(vals[x]) for x in F.prov_args[e, :ar])]
    h = Homomorphism(F.algebra(), target, tuple(int(v) for v in vals))
    if not is_homomorphism(F.algebra(), target, vals):
        raise QuasilabError("target outside Q(K): evaluation map is not a homomorphism")
    return h


@dataclass
class PresentedAlgebra:
    base: FreeAlgebra
    sigma: list[tuple[Term, Term]]
    theta: tuple[int, ...]
    quotient: FiniteAlgebra
    generators: list[int]          # images of the free generators in the quotient


def finitely_presented(K: Sequence[FiniteAlgebra], n: int, sigma: Sequence[tuple[Term, Term]],
                       size_cap: int | None = None) -> PresentedAlgebra:
    """F_Q(n) / theta_Q(sigma): keep exactly the coordinates where sigma holds."""
    F = free_algebra(K, n, size_cap)
    F.require_complete()
    keep = np.ones(len(F.coords), dtype=bool)
    for lhs, rhs in sigma:
        keep &= F.term_vector(lhs) == F.term_vector(rhs)
    sub = F.vectors[:, keep]
    theta = canonical(_row_ids(sub))
    reps = sorted(set(theta))
    labels = [f"[e{r}]" for r in reps]
    if keep.any():
        Q = vector_algebra(f"{F.name}/sigma", F.K, F.coord_alg[keep], sub[reps], labels)
    else:
        Q = trivial_algebra(F.sig, f"{F.name}/sigma")
    pos = {r: i for i, r in enumerate(reps)}
    gens = [pos[theta[g]] for g in F.generators]
    return PresentedAlgebra(F, list(sigma), theta, Q, gens)


def _row_ids(rows: np.ndarray) -> list[int]:
    ids: dict = {}
    return [ids.setdefault(r.tobytes(), len(ids)) for r in np.ascontiguousarray(rows)]
