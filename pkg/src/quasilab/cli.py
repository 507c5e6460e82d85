"""Command line interface: ``quasilab <verb> [options]``.

Exit status is 0 when a question is answered (yes or no), 2 when a budget
stopped the computation and 1 on usage, parse or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from itertools import combinations
from typing import Sequence

from . import closure, congruence, corpus, freealg, kernel, morphisms
from .clones import (CloneSpec, TD_READING, c_structurally_complete, prucnal_principal_check,
                     td_term_check, u_presentable)
from .congruence import (cg_q, con_all, con_q, is_filtral, partition_str, q_irreducible)
from .deduction import (QuasivarietyHandle, admissible, characteristic_quasiequation, derivable,
                        exact, in_structural_core, structurally_complete)
from .discriminator import (fixedpoint_conversions, ideals, is_dual_i_discriminator,
                            is_rpip_witness, is_rtpip_witness, is_subtraction_term,
                            synth_dual_i_discriminator, u_term_check, zero_regular_witnesses)
from .errors import BudgetExceeded, QuasilabError
from .kernel import FiniteAlgebra, parse_quasiequation, parse_term, print_algebra
from .morphisms import mingens, product, product_coords, subalgebras_upto_iso
from .projectivity import primitive, projective, weakly_projective
from .report import Report, jsonable, timed

EXIT = {"yes": 0, "no": 0, "unknown": 2, "error": 1}
XYZ = ["x", "y", "z"]

# --budget keys and the module globals they set
BUDGETS = {
    "hom_nodes": (morphisms, "DEFAULT_NODE_BUDGET"),
    "subalgebra_limit": (morphisms, "SUBALGEBRA_LIMIT"),
    "lattice_size": (congruence, "LATTICE_CAP"),
    "free_size": (freealg, "DEFAULT_SIZE_CAP"),
    "free_work": (closure, "WORK_LIMIT"),
    "materialize": (freealg, "MATERIALIZE_CAP"),
    "assignments": (kernel, "DEFAULT_ASSIGNMENT_BUDGET"),
}
DEEP_FACTOR = 50


class UsageError(QuasilabError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- inputs

def load_algebras(spec: str) -> list[FiniteAlgebra]:
    """``corpus:name``, a bare corpus name, ``path`` or ``path#name``."""
    path, _, pick = spec.partition("#") if not spec.startswith("corpus:") else (spec, "", "")
    try:
        algs = corpus.load(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    if pick:
        algs = [a for a in algs if a.name == pick]
        if not algs:
            raise UsageError(f"no algebra named {pick!r} in {path}")
    return algs


def load_one(spec: str) -> FiniteAlgebra:
    algs = load_algebras(spec)
    if len(algs) != 1:
        raise UsageError(f"{spec} holds {len(algs)} algebras; select one with {spec}#name")
    return algs[0]


def class_K(args) -> list[FiniteAlgebra]:
    if not args.K:
        raise UsageError("give the generator class with -K")
    return [a for spec in args.K for a in load_algebras(spec)]


def handle(args) -> QuasivarietyHandle:
    return QuasivarietyHandle(class_K(args), free_rank=args.free_rank)


def target(args, K: Sequence[FiniteAlgebra]) -> FiniteAlgebra:
    return load_one(args.algebra) if getattr(args, "algebra", None) else K[0]


def element(a: FiniteAlgebra, label: str) -> int:
    try:
        return a.index(label)
    except (KeyError, ValueError):
        raise UsageError(f"{label!r} is not an element of {a.name}") from None


def apply_budgets(items: Sequence[str], deep: bool):
    if deep:
        for mod, attr in BUDGETS.values():
            if attr != "SUBALGEBRA_LIMIT":
                setattr(mod, attr, getattr(mod, attr) * DEEP_FACTOR)
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or key not in BUDGETS:
            raise UsageError(f"bad budget {item!r}; keys: {', '.join(BUDGETS)}")
        try:
            n = int(value)
        except ValueError:
            raise UsageError(f"budget {key} needs an integer") from None
        mod, attr = BUDGETS[key]
        setattr(mod, attr, n)


# ---------------------------------------------------------------- verbs

def cmd_info(args) -> Report:
    with timed() as t:
        a = load_one(args.algebra)
        gens = mingens(a)
        L = con_all(a)
        w = {"size": a.n, "elements": a.labels, "signature": str(a.sig),
             "minimum_generators": [a.labels[g] for g in gens],
             "congruences": len(L), "simple": len(L) == 2,
             "provenance": corpus.PROVENANCE.get(a.name)}
        try:
            w["subalgebras_upto_iso"] = [s.n for s in subalgebras_upto_iso(a)]
        except BudgetExceeded:
            w["subalgebras_upto_iso"] = None
        return t.stamp(Report("info", "yes", inputs={"algebra": a.name}, witness=w))


def _lattice_report(question, L, inputs, t, args) -> Report:
    a = L.algebra
    w = {"size": len(L), "elements": [partition_str(a, p) for p in L.elements],
         "covers": L.covers}
    if args.plot:
        from .plotting import hasse_diagram
        w["plot"] = hasse_diagram(L, args.plot)
    return t.stamp(Report(question, "yes", inputs=inputs, witness=w,
                          data={"lattice": L}))


def cmd_con(args) -> Report:
    with timed() as t:
        a = load_one(args.algebra)
        try:
            L = con_all(a)
        except BudgetExceeded as e:
            return t.stamp(Report("con", "unknown", inputs={"algebra": a.name}, budget=e.cap))
        r = _lattice_report("con", L, {"algebra": a.name}, t, args)
        r.witness["simple"] = len(L) == 2
        r.verifier = lambda: all(congruence.is_congruence(a, p) for p in L.elements)
        return r


def cmd_conq(args) -> Report:
    with timed() as t:
        K = class_K(args)
        a = target(args, K)
        inputs = {"algebra": a.name, "K": [b.name for b in K]}
        try:
            L = con_q(a, K)
        except BudgetExceeded as e:
            return t.stamp(Report("conq", "unknown", inputs=inputs, budget=e.cap))
        r = _lattice_report("conq", L, inputs, t, args)
        r.witness["member"] = L.has_identity
        if L.has_identity and a.n > 1:
            qi = q_irreducible(a, K, L)
            r.witness["q_irreducible"] = qi.answer
            r.witness["monolith_pair"] = qi.witness.get("pair_labels")
        r.verifier = lambda: all(congruence.is_congruence(a, p) for p in L.elements)
        return r


def cmd_free(args) -> Report:
    with timed() as t:
        Q = handle(args)
        n = args.rank if args.rank is not None else Q.rank
        inputs = {"K": Q.names, "rank": n}
        F = freealg.free_algebra(Q.K, n)
        if F.truncated:
            return t.stamp(Report("free", "unknown", inputs=inputs, budget="free_size",
                                  witness={"elements_found": F.size}))
        names = [f"x{j}" for j in range(n)]
        w = {"size": F.size, "coordinates": len(F.coords)}
        if F.size <= 64:
            w["witnesses"] = {f"e{i}": F.witness(i).to_str(names) for i in range(F.size)}
        if args.export:
            text, side = F.export()
            with open(args.export, "w", encoding="utf-8") as fh:
                fh.write(text)
            with open(args.export + ".json", "w", encoding="utf-8") as fh:
                fh.write(side)
            w["export"] = args.export
        r = Report("free", "yes", inputs=inputs, witness=w)
        r.verifier = lambda: all(
            (F.term_vector(F.witness(i)) == F.vectors[i]).all() for i in range(min(F.size, 2000)))
        return t.stamp(r)


def cmd_derivable(args) -> Report:
    Q = handle(args)
    return derivable(Q, parse_quasiequation(args.rule, Q.sig))


def cmd_admissible(args) -> Report:
    Q = handle(args)
    return admissible(Q, parse_quasiequation(args.rule, Q.sig))


def cmd_sc(args) -> Report:
    return structurally_complete(handle(args))


def cmd_core(args) -> Report:
    Q = handle(args)
    return in_structural_core(Q, load_one(args.algebra))


def cmd_exact(args) -> Report:
    Q = handle(args)
    return exact(Q, load_one(args.algebra), args.max_vars)


def cmd_char(args) -> Report:
    with timed() as t:
        Q = handle(args)
        b = load_one(args.algebra)
        phi = characteristic_quasiequation(Q, b)
        return t.stamp(Report("char", "yes", inputs={"K": Q.names, "algebra": b.name},
                              witness={"quasiequation": phi.to_str(),
                                       "variables": dict(zip(phi.names, b.labels)),
                                       "premises": len(phi.premises)},
                              data={"quasiequation": phi}))


def cmd_projective(args) -> Report:
    Q = handle(args)
    return projective(Q, load_one(args.algebra))


def cmd_wproj(args) -> Report:
    Q = handle(args)
    return weakly_projective(Q, load_one(args.algebra))


def cmd_primitive(args) -> Report:
    return primitive(handle(args))


def _clone(args, sig) -> CloneSpec:
    return CloneSpec.parse(args.clone, sig) if args.clone else CloneSpec.full(sig)


def cmd_csc(args) -> Report:
    Q = handle(args)
    return c_structurally_complete(Q, _clone(args, Q.sig))


def cmd_upresent(args) -> Report:
    K = class_K(args)
    a = target(args, K)
    C = _clone(args, a.sig)
    if args.pair:
        x, y = (element(a, s.strip()) for s in args.pair.split(","))
        return u_presentable(a, K, cg_q(a, K, [(x, y)]), C)
    with timed() as t:
        thetas = sorted({cg_q(a, K, [(x, y)]) for x, y in combinations(range(a.n), 2)})
        rows, answer, budget = [], "yes", None
        for theta in thetas:
            r = u_presentable(a, K, theta, C)
            rows.append({"theta": partition_str(a, theta), "answer": r.answer,
                         "embedding": r.witness.get("embedding")})
            if r.no:
                answer = "no"
            elif r.answer == "unknown" and answer == "yes":
                answer, budget = "unknown", r.budget
        return t.stamp(Report("u_presentable", answer, budget=budget,
                              inputs={"algebra": a.name, "clone": C.to_str(),
                                      "congruences": "all principal relative"},
                              witness={"principal": rows}))


def _terms(args, sig, need: int) -> list:
    terms = args.term or []
    if len(terms) < need:
        raise UsageError(f"role {args.role} needs {need} --term value(s)")
    return terms


def cmd_check_term(args) -> Report:
    K = class_K(args)
    a = target(args, K)
    sig = K[0].sig
    role = args.role

    def term(text, arity=3):
        return parse_term(text, sig, ["x", "y", "z", "w"][:arity])

    if role == "dual-i-disc":
        return is_dual_i_discriminator(K, term(_terms(args, sig, 1)[0]))
    if role == "rpip":
        p, q = _terms(args, sig, 2)[:2]
        return is_rpip_witness(K, term(p, 4), term(q, 4))
    if role == "rtpip":
        return is_rtpip_witness(K, term(_terms(args, sig, 1)[0]))
    if role == "td":
        r = td_term_check(a, K, term(_terms(args, sig, 1)[0]))
        if TD_READING not in r.assumptions:
            r.assumptions.append(TD_READING)
        return r
    if role == "prucnal":
        C = CloneSpec.parse(args.clone, sig) if args.clone else None
        return prucnal_principal_check(a, K, term(_terms(args, sig, 1)[0]), C)
    if role == "subtraction":
        return is_subtraction_term(a, term(_terms(args, sig, 1)[0], 2), args.zero)
    if role == "zero-regular":
        return zero_regular_witnesses(a, K, [term(s, 2) for s in _terms(args, sig, 1)], args.zero)
    if role == "u-term":
        return u_term_check(a, K, term(_terms(args, sig, 1)[0], 2), args.zero)
    if role == "fixedpoint":
        if not args.point:
            raise UsageError("role fixedpoint needs --point (a constant term)")
        point = term(args.point)
        converted, r = fixedpoint_conversions(K, term(_terms(args, sig, 1)[0]), args.kind, point)
        r.witness["converted"] = converted.to_str(XYZ)
        return r
    raise UsageError(f"unknown role {role}")


def cmd_synth(args) -> Report:
    K = class_K(args)
    p = parse_term(args.rtpip, K[0].sig, XYZ)
    s = synth_dual_i_discriminator(K, p)
    r = s.report
    r.question = "synth_discriminator"
    r.witness["term"] = s.term.to_str(XYZ) if s.term.node_count() <= 2000 else None
    return r


def cmd_ideals(args) -> Report:
    K = class_K(args) if args.K else None
    a = load_one(args.algebra) if args.algebra else (K[0] if K else None)
    if a is None:
        raise UsageError("give an algebra")
    s = parse_term(args.term, a.sig, ["x", "y"])
    _, r = ideals(a, K, s, args.zero)
    return r


def cmd_filtral(args) -> Report:
    factors = class_K(args)
    if len(factors) < 2:
        raise UsageError("give at least two factors with -K")
    coords = product_coords(factors)
    if args.projection is not None:
        if not 0 <= args.projection < len(factors):
            raise UsageError("projection index out of range")
        theta = congruence.canonical(coords[:, args.projection].tolist())
    elif args.kernel_term:
        if any(f.key() != factors[0].key() for f in factors):
            raise UsageError("--kernel-term needs equal factors")
        names = [f"x{i}" for i in range(len(factors))]
        t = parse_term(args.kernel_term, factors[0].sig, names)
        theta = congruence.canonical([kernel.evaluate(t, factors[0], row) for row in coords.tolist()])
    elif args.theta:
        theta = congruence.canonical([int(x) for x in args.theta.replace(",", " ").split()])
        if len(theta) != len(coords):
            raise UsageError(f"theta needs {len(coords)} block ids")
    else:
        raise UsageError("give --projection, --kernel-term or --theta")
    P = product(factors)
    if not congruence.is_congruence(P, theta):
        raise UsageError("theta is not a congruence of the product")
    return is_filtral(factors, theta, coords)


def cmd_corpus(args) -> Report:
    with timed() as t:
        if args.name:
            a = corpus.corpus(args.name)
            return t.stamp(Report("corpus", "yes", inputs={"name": args.name},
                                  witness={"name": a.name, "provenance": corpus.PROVENANCE[a.name],
                                           "text": print_algebra(a)}))
        return t.stamp(Report("corpus", "yes", inputs={},
                              witness={"algebras": dict(corpus.PROVENANCE),
                                       "aliases": dict(corpus.ALIASES)}))


VERBS = {
    "info": cmd_info, "con": cmd_con, "conq": cmd_conq, "free": cmd_free,
    "derivable": cmd_derivable, "admissible": cmd_admissible, "sc": cmd_sc, "core": cmd_core,
    "exact": cmd_exact, "char": cmd_char, "projective": cmd_projective, "wproj": cmd_wproj,
    "primitive": cmd_primitive, "csc": cmd_csc, "upresent": cmd_upresent,
    "check-term": cmd_check_term, "synth-discriminator": cmd_synth, "ideals": cmd_ideals,
    "filtral": cmd_filtral, "corpus": cmd_corpus,
}

ROLES = ["dual-i-disc", "rpip", "rtpip", "td", "prucnal", "subtraction",
         "zero-regular", "u-term", "fixedpoint"]


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-K", action="append", metavar="SPEC",
                        help="generator algebra: corpus:NAME, NAME or FILE[#NAME] (repeatable)")
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    common.add_argument("--verify", action="store_true", help="replay the witness independently")
    common.add_argument("--free-rank", type=int, metavar="N", help="override the free rank bound")
    common.add_argument("--budget", action="append", metavar="KEY=VALUE",
                        help=f"set a cap ({', '.join(BUDGETS)})")
    common.add_argument("--deep", action="store_true",
                        help=f"multiply the default caps by {DEEP_FACTOR}")

    p = _Parser(prog="quasilab", description="Decision procedures for quasivarieties of finite algebras.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def verb(name, help, algebra=None):
        s = sub.add_parser(name, parents=[common], help=help)
        if algebra == "required":
            s.add_argument("algebra", help="algebra spec")
        elif algebra == "optional":
            s.add_argument("algebra", nargs="?", help="algebra spec (default: first of -K)")
        return s

    verb("info", "summary of one algebra", "required")
    verb("con", "congruence lattice", "required").add_argument("--plot", metavar="FILE")
    verb("conq", "relative congruence lattice", "optional").add_argument("--plot", metavar="FILE")
    s = verb("free", "free algebra of Q(K)")
    s.add_argument("-n", "--rank", type=int)
    s.add_argument("--export", metavar="FILE", help="write the algebra file and FILE.json witnesses")
    verb("derivable", "is the rule valid in K", None).add_argument("rule")
    verb("admissible", "is the rule admissible in Q(K)", None).add_argument("rule")
    verb("sc", "structural completeness of Q(K)")
    verb("core", "is the algebra in the structural core", "required")
    verb("exact", "does the algebra embed into a free algebra", "required").add_argument(
        "--max-vars", type=int, default=3)
    verb("char", "characteristic quasiequation", "required")
    verb("projective", "projectivity in Q(K)", "required")
    verb("wproj", "weak projectivity in Q(K)", "required")
    verb("primitive", "primitivity of Q(K)")
    verb("csc", "structural completeness for a subclone").add_argument(
        "--clone", help="semicolon-separated terms, e.g. 'meet(x,y); imp(x,y)'")
    s = verb("upresent", "u-presentability of principal relative congruences", "optional")
    s.add_argument("--clone")
    s.add_argument("--pair", metavar="A,B", help="only cg_Q(A,B)")
    s = verb("check-term", "check a term against a role", "optional")
    s.add_argument("--role", required=True, choices=ROLES)
    s.add_argument("--term", action="append", help="term over x,y,z (w for the 4-ary roles)")
    s.add_argument("--clone")
    s.add_argument("--zero", help="name of the constant used as 0")
    s.add_argument("--kind", choices=["d", "p"], default="d")
    s.add_argument("--point", help="constant term naming the designated point")
    verb("synth-discriminator", "build a dual i-discriminator").add_argument(
        "--rtpip", required=True, metavar="TERM")
    s = verb("ideals", "ideals from a subtraction term", "optional")
    s.add_argument("--term", required=True, help="subtraction term s(x,y)")
    s.add_argument("--zero")
    s = verb("filtral", "is a congruence of the product of the -K factors filtral")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--projection", type=int, metavar="I")
    g.add_argument("--kernel-term", metavar="TERM", help="kernel of a term over x0, x1, ...")
    g.add_argument("--theta", help="block id per product element, mixed-radix order")
    sub.add_parser("corpus", parents=[common], help="list or print built-in algebras").add_argument(
        "name", nargs="?")
    return p


# ---------------------------------------------------------------- output

def render_text(r: Report, verified: bool | None) -> str:
    lines = [r.summary()]
    for k, v in r.witness.items():
        if isinstance(v, str) and "\n" in v:
            lines.append(f"  {k}:")
            lines.extend("    " + s for s in v.rstrip().splitlines())
        else:
            lines.append(f"  {k}: {json.dumps(jsonable(v))}")
    for a in r.assumptions:
        lines.append(f"  assumption: {a}")
    for n in r.notes:
        lines.append(f"  note: {n}")
    if verified is not None:
        lines.append(f"  verified: {'yes' if verified else 'NO'}")
    return "\n".join(lines)


def emit(r: Report, args, verified: bool | None):
    if args.json:
        d = r.to_dict()
        if verified is not None:
            d["verified"] = verified
        print(json.dumps(d, indent=2))
    else:
        print(render_text(r, verified))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        apply_budgets(args.budget, args.deep)
        r = VERBS[args.verb](args)
    except QuasilabError as e:
        r = Report(args.verb, "error", notes=[str(e)])
        if args.json:
            print(r.to_json())
        else:
            print(f"{args.verb}: error: {e}", file=sys.stderr)
        return 1
    verified = None
    if args.verify:
        try:
            verified = r.verify()
        except QuasilabError:
            verified = False
    emit(r, args, verified)
    if verified is False:
        return 1
    return EXIT[r.answer]


if __name__ == "__main__":
    sys.exit(main())
