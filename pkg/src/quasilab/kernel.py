"""Signatures, finite algebras, terms and quasiequations.

Elements of an algebra are dense indices ``0..n-1``; labels are only used for
printing and parsing.  Operation tables are numpy arrays of shape
``(n,) * arity`` (C order, so the flat view is row-major over lexicographic
argument tuples).
"""
from __future__ import annotations

import re
import weakref
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetExceeded, ParseError, QuasilabError

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

DEFAULT_ASSIGNMENT_BUDGET = 50_000_000
# cells evaluated per vectorised block in holds()
_BLOCK = 2_000_000


@dataclass(frozen=True)
class Signature:
    ops: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.ops]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise QuasilabError(f"duplicate op name {dup!r}")
        for name, arity in self.ops:
            if arity < 0:
                raise QuasilabError(f"negative arity for {name!r}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.ops]

    def arity(self, name: str) -> int:
        for n, a in self.ops:
            if n == name:
                return a
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(n == name for n, _ in self.ops)

    @property
    def constants(self) -> list[str]:
        return [n for n, a in self.ops if a == 0]

    def __str__(self):
        return ", ".join(f"{n}/{a}" for n, a in self.ops)


class FiniteAlgebra:
    """A finite algebra with total operation tables."""

    __slots__ = ("name", "sig", "labels", "tables", "_key", "__weakref__")

    def __init__(self, name: str, sig: Signature, labels: Sequence[str],
                 tables: Mapping[str, np.ndarray]):
        labels = tuple(str(x) for x in labels)
        n = len(labels)
        if n == 0:
            raise QuasilabError("an algebra needs at least one element")
        if len(set(labels)) != n:
            raise QuasilabError("element labels must be distinct")
        fixed = {}
        for opname, arity in sig.ops:
            if opname not in tables:
                raise QuasilabError(f"missing table for {opname!r}")
            t = np.asarray(tables[opname], dtype=np.int32)
            if t.size != n ** arity:
                raise QuasilabError(
                    f"table size mismatch for {opname}/{arity}: "
                    f"expected {n ** arity} entries, got {t.size}")
            t = t.reshape((n,) * arity).copy()
            if t.size and (t.min() < 0 or t.max() >= n):
                raise QuasilabError(f"out-of-range entry in table of {opname!r}")
            t.setflags(write=False)
            fixed[opname] = t
        extra = set(tables) - set(sig.names)
        if extra:
            raise QuasilabError(f"tables for unknown ops: {sorted(extra)}")
        self.name = name
        self.sig = sig
        self.labels = labels
        self.tables = fixed
        self._key = None

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return f"FiniteAlgebra({self.name!r}, n={self.n}, sig=[{self.sig}])"

    def apply(self, op: str, *args: int) -> int:
        return int(self.tables[op][tuple(args)])

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def key(self) -> bytes:
        """Content fingerprint (signature + tables, labels ignored)."""
        if self._key is None:
            parts = [str(self.sig).encode(), str(self.n).encode()]
            parts += [self.tables[name].tobytes() for name in self.sig.names]
            self._key = b"|".join(parts)
        return self._key

    def rename(self, name: str) -> "FiniteAlgebra":
        return FiniteAlgebra(name, self.sig, self.labels, self.tables)

    def relabel(self, labels: Sequence[str]) -> "FiniteAlgebra":
        return FiniteAlgebra(self.name, self.sig, labels, self.tables)

    def permuted(self, perm: Sequence[int], name: str | None = None) -> "FiniteAlgebra":
        """Isomorphic copy in which old element i becomes new element perm[i]."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        tables = {}
        for opname, arity in self.sig.ops:
            t = self.tables[opname]
            if arity:
                t = t[np.ix_(*([inv] * arity))]
            tables[opname] = perm[t]
        labels = [self.labels[i] for i in inv]
        return FiniteAlgebra(name or self.name, self.sig, labels, tables)


# ---------------------------------------------------------------- terms

class Term:
    """Hash-consed term node.  Structurally equal terms are the same object."""

    __slots__ = ("op", "args", "var", "_hash", "__weakref__")
    _pool: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, op, args=(), var=-1):
        key = (op, var, tuple(id(a) for a in args))
        node = cls._pool.get(key)
        if node is not None:
            return node
        node = object.__new__(cls)
        node.op = op
        node.args = tuple(args)
        node.var = var
        node._hash = hash(key)
        cls._pool[key] = node
        return node

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __reduce__(self):
        return (Term, (self.op, self.args, self.var))

    @property
    def is_var(self) -> bool:
        return self.op is None

    def nodes(self) -> list["Term"]:
        """Distinct subterms in post-order (children before parents)."""
        seen, out = set(), []
        stack = [(self, False)]
        while stack:
            t, done = stack.pop()
            if done:
                out.append(t)
                continue
            if id(t) in seen:
                continue
            seen.add(id(t))
            stack.append((t, True))
            for a in reversed(t.args):
                if id(a) not in seen:
                    stack.append((a, False))
        return out

    def node_count(self) -> int:
        return len(self.nodes())

    def variables(self) -> set[int]:
        return {t.var for t in self.nodes() if t.is_var}

    def nvars(self) -> int:
        vs = self.variables()
        return max(vs) + 1 if vs else 0

    def ops_used(self) -> set[str]:
        return {t.op for t in self.nodes() if not t.is_var}

    def depth(self) -> int:
        d = {}
        for t in self.nodes():
            d[id(t)] = 0 if not t.args else 1 + max(d[id(a)] for a in t.args)
        return d[id(self)]

    def substitute(self, mapping: Mapping[int, "Term"]) -> "Term":
        memo: dict[int, Term] = {}
        for t in self.nodes():
            if t.is_var:
                memo[id(t)] = mapping.get(t.var, t)
            else:
                memo[id(t)] = App(t.op, *(memo[id(a)] for a in t.args))
        return memo[id(self)]

    def to_str(self, names: Sequence[str] | None = None) -> str:
        memo: dict[int, str] = {}
        for t in self.nodes():
            if t.is_var:
                memo[id(t)] = names[t.var] if names and t.var < len(names) else f"x{t.var}"
            elif not t.args:
                memo[id(t)] = t.op
            else:
                memo[id(t)] = f"{t.op}(" + ", ".join(memo[id(a)] for a in t.args) + ")"
        return memo[id(self)]

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Term({self.to_str()!r})"


def Var(i: int) -> Term:
    return Term(None, (), i)


def App(op: str, *args: Term) -> Term:
    return Term(op, args)


def check_term(t: Term, sig: Signature) -> None:
    for node in t.nodes():
        if node.is_var:
            continue
        if node.op not in sig:
            raise QuasilabError(f"unknown op {node.op!r}")
        if sig.arity(node.op) != len(node.args):
            raise QuasilabError(f"arity mismatch for {node.op!r}")


@dataclass(frozen=True)
class Quasiequation:
    premises: tuple[tuple[Term, Term], ...]
    conclusion: tuple[Term, Term]
    nvars: int
    names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for s, t in self.premises + (self.conclusion,):
            for v in s.variables() | t.variables():
                if v >= self.nvars:
                    raise QuasilabError("variable index out of range")

    @property
    def is_equation(self) -> bool:
        return not self.premises

    def to_str(self) -> str:
        names = self.names or None

        def eq(p):
            return f"{p[0].to_str(names)} = {p[1].to_str(names)}"
        concl = eq(self.conclusion)
        if not self.premises:
            return concl
        return ", ".join(eq(p) for p in self.premises) + " => " + concl

    def __str__(self):
        return self.to_str()

    def ops_used(self) -> set[str]:
        out = set()
        for s, t in self.premises + (self.conclusion,):
            out |= s.ops_used() | t.ops_used()
        return out


@dataclass(frozen=True)
class Assignment:
    target: FiniteAlgebra
    values: Mapping[int, int]


# ---------------------------------------------------------------- parsing

def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_algebras(text: str) -> list[FiniteAlgebra]:
    """Parse every ``algebra ... end`` block in ``text``."""
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        for m in re.finditer(r"\S+", line):
            tokens.append((m.group(), lineno, m.start() + 1))
    out = []
    pos = 0

    def need(what):
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1] if tokens else ("", 1, 1)
            raise ParseError(f"unexpected end of input, expected {what}", last[1], last[2])
        tok = tokens[pos]
        pos += 1
        return tok

    while pos < len(tokens):
        tok, ln, col = need("'algebra'")
        if tok != "algebra":
            raise ParseError(f"expected 'algebra', got {tok!r}", ln, col)
        name, ln, col = need("algebra name")
        if not IDENT.fullmatch(name):
            raise ParseError(f"bad algebra name {name!r}", ln, col)
        tok, ln, col = need("'elements'")
        if tok != "elements":
            raise ParseError(f"expected 'elements', got {tok!r}", ln, col)
        labels = []
        while pos < len(tokens) and tokens[pos][0] not in ("op", "end"):
            lab, ln, col = need("element")
            if lab in labels:
                raise ParseError(f"duplicate element {lab!r}", ln, col)
            labels.append(lab)
        if not labels:
            raise ParseError("no elements", ln, col)
        index = {lab: i for i, lab in enumerate(labels)}
        n = len(labels)
        ops, tables = [], {}
        while True:
            tok, ln, col = need("'op' or 'end'")
            if tok == "end":
                break
            if tok != "op":
                raise ParseError(f"expected 'op' or 'end', got {tok!r}", ln, col)
            spec, ln, col = need("op name/arity")
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)/(\d+)", spec)
            if not m:
                raise ParseError(f"bad op declaration {spec!r}", ln, col)
            opname, arity = m.group(1), int(m.group(2))
            if opname in tables:
                raise ParseError(f"duplicate op name {opname!r}", ln, col)
            entries = []
            while pos < len(tokens) and tokens[pos][0] not in ("op", "end"):
                ent, eln, ecol = need("table entry")
                if ent not in index:
                    raise ParseError(f"out-of-range entry {ent!r}", eln, ecol)
                entries.append(index[ent])
            if len(entries) != n ** arity:
                raise ParseError(
                    f"table size mismatch for {opname}/{arity}: expected "
                    f"{n ** arity} entries, got {len(entries)}", ln, col)
            ops.append((opname, arity))
            tables[opname] = np.array(entries, dtype=np.int32)
        out.append(FiniteAlgebra(name, Signature(tuple(ops)), labels, tables))
    return out


def parse_algebra(text: str) -> FiniteAlgebra:
    algs = parse_algebras(text)
    if len(algs) != 1:
        raise ParseError(f"expected exactly one algebra, found {len(algs)}", 1, 1)
    return algs[0]


def print_algebra(a: FiniteAlgebra) -> str:
    lines = [f"algebra {a.name}", "elements " + " ".join(a.labels)]
    for opname, arity in a.sig.ops:
        lines.append(f"op {opname}/{arity}")
        flat = a.tables[opname].reshape(-1)
        if arity <= 1:
            lines.append("  " + " ".join(a.labels[v] for v in flat))
        else:
            for row in flat.reshape(-1, a.n):
                lines.append("  " + " ".join(a.labels[v] for v in row))
    lines.append("end")
    return "\n".join(lines) + "\n"


class _TermParser:
    def __init__(self, text: str, sig: Signature, names: list[str], fixed: bool):
        self.text = text
        self.sig = sig
        self.names = names
        self.fixed = fixed
        self.pos = 0

    def error(self, msg):
        col = self.pos + 1
        raise ParseError(msg, 1, col)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            got = self.peek() or "end of input"
            self.error(f"expected {ch!r}, got {got!r}")
        self.pos += 1

    def term(self) -> Term:
        self.skip()
        m = IDENT.match(self.text, self.pos)
        if not m:
            self.error("expected a term")
        ident = m.group()
        start = self.pos
        self.pos = m.end()
        if ident in self.sig:
            arity = self.sig.arity(ident)
            if self.peek() == "(":
                if arity == 0:
                    self.pos = start
                    self.error(f"arity: constant {ident!r} takes no arguments")
                self.pos += 1
                args = [self.term()]
                while self.peek() == ",":
                    self.pos += 1
                    args.append(self.term())
                self.expect(")")
                if len(args) != arity:
                    self.pos = start
                    self.error(f"arity: {ident!r} expects {arity} arguments, got {len(args)}")
                return App(ident, *args)
            if arity != 0:
                self.pos = start
                self.error(f"arity: {ident!r} expects {arity} arguments")
            return App(ident)
        if self.peek() == "(":
            self.pos = start
            self.error(f"unknown operation {ident!r}")
        if ident not in self.names:
            if self.fixed:
                self.pos = start
                self.error(f"unknown variable {ident!r}")
            self.names.append(ident)
        return Var(self.names.index(ident))

    def equation(self) -> tuple[Term, Term]:
        lhs = self.term()
        self.expect("=")
        if self.peek() == ">":
            self.error("expected a term after '='")
        return lhs, self.term()

    def done(self):
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")


def parse_term_named(text: str, sig: Signature, varnames: Sequence[str] | None = None,
                     ) -> tuple[Term, list[str]]:
    """Parse a term; returns the term and its variable names in index order.

    With ``varnames`` given, variables take those indices and any other
    identifier is an error.  Otherwise variables are numbered by first
    occurrence.
    """
    names = list(varnames) if varnames is not None else []
    p = _TermParser(text, sig, names, fixed=varnames is not None)
    t = p.term()
    p.done()
    return t, names


def parse_term(text: str, sig: Signature, varnames: Sequence[str] | None = None) -> Term:
    return parse_term_named(text, sig, varnames)[0]


def parse_quasiequation(text: str, sig: Signature,
                        varnames: Sequence[str] | None = None) -> Quasiequation:
    names = list(varnames) if varnames is not None else []
    premises = []
    if "=>" in text:
        left, right = text.split("=>", 1)
        if left.strip():
            p = _TermParser(left, sig, names, fixed=varnames is not None)
            premises.append(p.equation())
            while p.peek() == ",":
                p.pos += 1
                premises.append(p.equation())
            p.done()
    else:
        right = text
    p = _TermParser(right, sig, names, fixed=varnames is not None)
    conclusion = p.equation()
    p.done()
    return Quasiequation(tuple(premises), conclusion, len(names), tuple(names))


# ---------------------------------------------------------------- evaluation

def evaluate(t: Term, algebra: FiniteAlgebra, values: Sequence[int] | Mapping[int, int]) -> int:
    """Value of ``t`` under an assignment, memoised over shared subterms."""
    memo: dict[int, int] = {}
    for node in t.nodes():
        if node.is_var:
            memo[id(node)] = int(values[node.var])
        else:
            memo[id(node)] = int(algebra.tables[node.op][tuple(memo[id(a)] for a in node.args)])
    return memo[id(t)]


def eval_assignment(t: Term, a: Assignment) -> int:
    return evaluate(t, a.target, a.values)


def term_table(t: Term, algebra: FiniteAlgebra, nvars: int | None = None,
               memo: dict | None = None) -> np.ndarray:
    """Term operation of ``t`` on ``algebra`` as an array of shape (n,)*nvars.

    A shared ``memo`` is only valid for one (algebra, nvars) pair.
    """
    if nvars is None:
        nvars = t.nvars()
    return np.asarray(_broadcast_eval([t], algebra, nvars, None, memo)[0])


def _broadcast_eval(terms, algebra, nvars, fixed, memo=None):
    """Evaluate terms over all assignments of the free (non-fixed) variables.

    ``fixed`` maps some variable indices to element values; the remaining
    variables get one axis each, in index order.
    """
    n = algebra.n
    free = [v for v in range(nvars) if not fixed or v not in fixed]
    shape = (n,) * len(free)
    axis = {v: i for i, v in enumerate(free)}
    memo = {} if memo is None else memo
    out = []
    for t in terms:
        for node in t.nodes():
            if id(node) in memo:
                continue
            if node.is_var:
                if fixed and node.var in fixed:
                    memo[id(node)] = np.int32(fixed[node.var])
                else:
                    sh = [1] * len(free)
                    sh[axis[node.var]] = n
                    memo[id(node)] = np.arange(n, dtype=np.int32).reshape(sh)
            else:
                table = algebra.tables[node.op]
                if node.args:
                    memo[id(node)] = table[tuple(memo[id(a)] for a in node.args)]
                else:
                    memo[id(node)] = table[()]
        out.append(np.broadcast_to(memo[id(t)], shape))
    return out


def find_counterexample(algebra: FiniteAlgebra, q: Quasiequation,
                        budget: int | None = None) -> tuple[int, ...] | None:
    """Lexicographically least assignment refuting ``q`` in ``algebra``, or None."""
    if budget is None:
        budget = DEFAULT_ASSIGNMENT_BUDGET
    n, v = algebra.n, q.nvars
    total = n ** v
    if total > budget:
        raise BudgetExceeded("assignments", f"{n}^{v} = {total} assignments > {budget}")
    for fixed in _prefixes(n, v):
        terms = [t for pair in q.premises + (q.conclusion,) for t in pair]
        vals = _broadcast_eval(terms, algebra, v, fixed)
        ok = np.ones(vals[0].shape, dtype=bool)
        for i in range(len(q.premises)):
            ok &= vals[2 * i] == vals[2 * i + 1]
        bad = ok & (vals[-2] != vals[-1])
        if bad.any():
            idx = np.unravel_index(int(np.argmax(bad.reshape(-1))), bad.shape) if bad.ndim else ()
            prefix = [fixed[i] for i in range(len(fixed))]
            return tuple(prefix) + tuple(int(i) for i in idx)
    return None


def _prefixes(n: int, v: int):
    """Split the assignment space into lexicographically ordered blocks."""
    k = 0
    while k < v and n ** (v - k) > _BLOCK:
        k += 1
    for prefix in product(range(n), repeat=k):
        yield dict(enumerate(prefix))


def holds(algebra: FiniteAlgebra, q: Quasiequation,
          budget: int | None = None) -> bool:
    return find_counterexample(algebra, q, budget) is None


def equation(lhs: Term, rhs: Term, nvars: int | None = None) -> Quasiequation:
    if nvars is None:
        nvars = max(lhs.nvars(), rhs.nvars())
    return Quasiequation((), (lhs, rhs), nvars)


def all_assignments(n: int, nvars: int) -> Iterable[tuple[int, ...]]:
    return product(range(n), repeat=nvars)
