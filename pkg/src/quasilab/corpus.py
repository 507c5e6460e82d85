"""Built-in algebras, stored as algebra-file text."""
from __future__ import annotations

import os

from .errors import QuasilabError
from .kernel import FiniteAlgebra, parse_algebras

PROVENANCE = {
    "lat2": "two-element lattice",
    "bdl2": "two-element bounded lattice",
    "chain3": "three-element chain lattice",
    "m2": "simple de Morgan algebra M2 (two-element Boolean algebra)",
    "bool2": "two-element Boolean algebra (same tables as m2)",
    "m3": "simple de Morgan algebra M3, the three-element Kleene algebra",
    "m4": "simple de Morgan algebra M4; negation fixes both atoms",
    "impl2": "two-element implication algebra",
    "heyting3": "three-element Heyting chain",
    "hilbert4": "four-element Hilbert algebra (implication reduct of the 4-chain)",
    "z2": "cyclic group Z2",
    "z4": "cyclic group Z4",
    "twist3": "ternary p with p(a,b,c)=c for a!=b and p(a,a,c) a transposition of a",
    "fano": "Fano lattice: the 16 subspaces of (Z_2)^3",
}

CORPUS_TEXT = """\
# two-element lattice
algebra lat2
elements 0 1
op meet/2
0 0
0 1
op join/2
0 1
1 1
end

# two-element bounded lattice
algebra bdl2
elements 0 1
op meet/2
0 0
0 1
op join/2
0 1
1 1
op c0/0
0
op c1/0
1
end

# three-element chain lattice
algebra chain3
elements 0 m 1
op meet/2
0 0 0
0 m m
0 m 1
op join/2
0 m 1
m m 1
1 1 1
end

# M2: two-element Boolean algebra in the de Morgan signature
algebra m2
elements 0 1
op meet/2
0 0
0 1
op join/2
0 1
1 1
op neg/1
1 0
op c0/0
0
op c1/0
1
end

# two-element Boolean algebra
algebra bool2
elements 0 1
op meet/2
0 0
0 1
op join/2
0 1
1 1
op neg/1
1 0
op c0/0
0
op c1/0
1
end

# M3: three-element Kleene algebra, neg(a) = a
algebra m3
elements 0 a 1
op meet/2
0 0 0
0 a a
0 a 1
op join/2
0 a 1
a a 1
1 1 1
op neg/1
1 a 0
op c0/0
0
op c1/0
1
end

# M4: four-element simple de Morgan algebra, neg fixes a and b
algebra m4
elements 0 a b 1
op meet/2
0 0 0 0
0 a 0 a
0 0 b b
0 a b 1
op join/2
0 a b 1
a a 1 1
b 1 b 1
1 1 1 1
op neg/1
1 a b 0
op c0/0
0
op c1/0
1
end

# two-element implication algebra
algebra impl2
elements 0 1
op imp/2
1 1
0 1
end

# three-element Heyting chain
algebra heyting3
elements 0 h 1
op meet/2
0 0 0
0 h h
0 h 1
op join/2
0 h 1
h h 1
1 1 1
op imp/2
1 1 1
0 1 1
0 h 1
op c0/0
0
op c1/0
1
end

# four-element Hilbert algebra: implication reduct of the 4-chain
algebra hilbert4
elements 0 h k 1
op imp/2
1 1 1 1
0 1 1 1
0 h 1 1
0 h k 1
op c1/0
1
end

# cyclic group of order 2
algebra z2
elements 0 1
op add/2
0 1
1 0
op neg/1
0 1
op zero/0
0
end

# cyclic group of order 4
algebra z4
elements 0 1 2 3
op add/2
0 1 2 3
1 2 3 0
2 3 0 1
3 0 1 2
op neg/1
0 3 2 1
op zero/0
0
end

# p(a,b,c) = c for a != b, p(a,a,c) = s(a) with s the transposition (0 1)
algebra twist3
elements 0 1 2
op p/3
1 1 1
0 1 2
0 1 2
0 1 2
0 0 0
0 1 2
0 1 2
0 1 2
2 2 2
end

# Fano lattice: subspaces of (Z_2)^3; p = points, l = lines
algebra fano
elements 0 p1 p2 p3 p4 p5 p6 p7 l1 l2 l3 l4 l5 l6 l7 1
op meet/2
0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
0 p1 0 0 0 0 0 0 0 p1 0 p1 0 p1 0 p1
0 0 p2 0 0 0 0 0 p2 0 0 p2 p2 0 0 p2
0 0 0 p3 0 0 0 0 0 0 p3 p3 0 0 p3 p3
0 0 0 0 p4 0 0 0 p4 p4 p4 0 0 0 0 p4
0 0 0 0 0 p5 0 0 0 p5 0 0 p5 0 p5 p5
0 0 0 0 0 0 p6 0 p6 0 0 0 0 p6 p6 p6
0 0 0 0 0 0 0 p7 0 0 p7 0 p7 p7 0 p7
0 0 p2 0 p4 0 p6 0 l1 p4 p4 p2 p2 p6 p6 l1
0 p1 0 0 p4 p5 0 0 p4 l2 p4 p1 p5 p1 p5 l2
0 0 0 p3 p4 0 0 p7 p4 p4 l3 p3 p7 p7 p3 l3
0 p1 p2 p3 0 0 0 0 p2 p1 p3 l4 p2 p1 p3 l4
0 0 p2 0 0 p5 0 p7 p2 p5 p7 p2 l5 p7 p5 l5
0 p1 0 0 0 0 p6 p7 p6 p1 p7 p1 p7 l6 p6 l6
0 0 0 p3 0 p5 p6 0 p6 p5 p3 p3 p5 p6 l7 l7
0 p1 p2 p3 p4 p5 p6 p7 l1 l2 l3 l4 l5 l6 l7 1
op join/2
0 p1 p2 p3 p4 p5 p6 p7 l1 l2 l3 l4 l5 l6 l7 1
p1 p1 l4 l4 l2 l2 l6 l6 1 l2 1 l4 1 l6 1 1
p2 l4 p2 l4 l1 l5 l1 l5 l1 1 1 l4 l5 1 1 1
p3 l4 l4 p3 l3 l7 l7 l3 1 1 l3 l4 1 1 l7 1
p4 l2 l1 l3 p4 l2 l1 l3 l1 l2 l3 1 1 1 1 1
p5 l2 l5 l7 l2 p5 l7 l5 1 l2 1 1 l5 1 l7 1
p6 l6 l1 l7 l1 l7 p6 l6 l1 1 1 1 1 l6 l7 1
p7 l6 l5 l3 l3 l5 l6 p7 1 1 l3 1 l5 l6 1 1
l1 1 l1 1 l1 1 l1 1 l1 1 1 1 1 1 1 1
l2 l2 1 1 l2 l2 1 1 1 l2 1 1 1 1 1 1
l3 1 1 l3 l3 1 1 l3 1 1 l3 1 1 1 1 1
l4 l4 l4 l4 1 1 1 1 1 1 1 l4 1 1 1 1
l5 1 l5 1 1 l5 1 l5 1 1 1 1 l5 1 1 1
l6 l6 1 1 1 1 l6 l6 1 1 1 1 1 l6 1 1
l7 1 1 l7 1 l7 l7 1 1 1 1 1 1 1 l7 1
1 1 1 1 1 1 1 1 1 1 1 1 1 1 1 1
end
"""

ALIASES = {"kleene3": "m3", "impl": "impl2", "boolean2": "bool2"}

_cache: dict[str, FiniteAlgebra] = {}


def names() -> list[str]:
    return list(PROVENANCE)


def corpus(name: str) -> FiniteAlgebra:
    name = name.removeprefix("corpus:")
    name = ALIASES.get(name, name)
    if not _cache:
        for a in parse_algebras(CORPUS_TEXT):
            _cache[a.name] = a
    try:
        return _cache[name]
    except KeyError:
        raise QuasilabError(f"unknown corpus algebra {name!r}; known: {', '.join(names())}") from None


def load(spec: str) -> list[FiniteAlgebra]:
    """Resolve ``corpus:name`` or a path to an algebra file."""
    if spec.startswith("corpus:"):
        return [corpus(spec)]
    if not os.path.exists(spec) and (spec in PROVENANCE or spec in ALIASES):
        return [corpus(spec)]
    with open(spec, encoding="utf-8") as fh:
        return parse_algebras(fh.read())
