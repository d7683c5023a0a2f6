"""Preprocessing passes that bring a parsed system into the core fragment.

Three passes run in order:

1. Selector and tester elimination.  Each clause mentioning ``sel(t)`` or
   ``(_ is C)(t)`` is duplicated once per constructor of t's sort, with
   the case constraint ``t = C(fresh fields)`` added; selectors resolve to
   the matching fresh field (or to an unconstrained fresh variable when
   applied under the wrong constructor), testers to true/false.

2. ADT disequality encoding.  ``t1 != t2`` at an ADT sort cannot stay a
   constraint once ADT equality is abstracted component-wise, so each such
   atom becomes an application of a generated ``diseq!<sort>`` predicate
   whose defining clauses derive exactly the pairs of distinct ground
   terms.

3. Admissibility augmentation.  Every ADT-sorted clause variable x gains a
   body atom ``adm!<sort>(x)``, and defining clauses make each ``adm!``
   predicate hold of every ground term.  After abstraction these
   predicates confine abstract tuples to the catamorphism's image, which
   is what makes the abstract system a sound over-approximation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .terms import (
    FALSE,
    TRUE,
    Add,
    And,
    App,
    Atom,
    BoolVal,
    ChcSystem,
    Clause,
    Cmp,
    Constraint,
    Constructor,
    Not,
    Or,
    SelApp,
    Sort,
    Term,
    TestApp,
    UnsupportedFeature,
    Var,
    conj,
    constraint_terms,
    fold_constraint,
    sort_of,
    subterms,
)

ADM_PREFIX = "adm!"
DISEQ_PREFIX = "diseq!"


def adm_pred_name(sort: Sort) -> str:
    return ADM_PREFIX + sort.name


def diseq_pred_name(sort: Sort) -> str:
    return DISEQ_PREFIX + sort.name


def is_reserved_pred(name: str) -> bool:
    return name.startswith(ADM_PREFIX) or name.startswith(DISEQ_PREFIX)


@dataclass
class PreprocessReport:
    """What the pipeline did, for diagnostics and tests."""

    selector_sites: int = 0
    tester_sites: int = 0
    case_split_clauses: int = 0
    diseq_sorts: Tuple[str, ...] = ()
    diseq_clauses: int = 0
    admissibility_sorts: Tuple[str, ...] = ()
    admissibility_atoms: int = 0
    origin: Dict[str, str] = field(default_factory=dict)


# ======================================================================
# Pass 1: selectors and testers
# ======================================================================

def _find_split_target(cl: Clause) -> Optional[Term]:
    """An ADT term under a selector or tester whose own argument is clean.

    Choosing an innermost site first means nested selectors resolve in
    finitely many rounds.
    """
    def clean(t: Term) -> bool:
        return not any(isinstance(s, SelApp) for s in subterms(t))

    candidates: List[Term] = []
    for t in constraint_terms(cl.constraint):
        for s in subterms(t):
            if isinstance(s, SelApp) and clean(s.arg):
                candidates.append(s.arg)
    for c in _all_constraint_nodes(cl.constraint):
        if isinstance(c, TestApp) and clean(c.arg):
            candidates.append(c.arg)
    for at in list(cl.body) + ([cl.head] if cl.head else []):
        for t in at.args:
            for s in subterms(t):
                if isinstance(s, SelApp) and clean(s.arg):
                    candidates.append(s.arg)
    return candidates[0] if candidates else None


def _all_constraint_nodes(c: Constraint):
    yield c
    if isinstance(c, (And, Or)):
        for p in c.args:
            yield from _all_constraint_nodes(p)
    elif isinstance(c, Not):
        yield from _all_constraint_nodes(c.arg)


def _fresh_namer(cl: Clause):
    used = {v.name for v in cl.vars}
    counter = itertools.count()

    def fresh(base: str, sort: Sort) -> Var:
        while True:
            name = f"{base}!{next(counter)}"
            if name not in used:
                used.add(name)
                return Var(name, sort)

    return fresh


def _rewrite_case(
    cl: Clause, target: Term, ctor: Constructor, system: ChcSystem
) -> Tuple[Clause, int, int]:
    """One case of the split: assume ``target = ctor(fresh fields)`` and
    resolve every selector/tester applied to ``target``."""
    fresh = _fresh_namer(cl)
    fields = tuple(fresh(f"{ctor.name}!{sel}", fsort) for sel, fsort in ctor.fields)
    new_vars = list(cl.vars) + list(fields)
    junk: Dict[str, Var] = {}
    sel_sites = 0
    test_sites = 0

    def rw_term(t: Term) -> Term:
        nonlocal sel_sites
        if isinstance(t, SelApp) and t.arg == target:
            sel_sites += 1
            _, owner, idx = system.selector_site(t.selector)
            if owner.name == ctor.name:
                return fields[idx]
            # Selector under the wrong constructor: underspecified, so an
            # unconstrained fresh variable stands for its value.
            if t.selector not in junk:
                junk[t.selector] = fresh(f"junk!{t.selector}", t.sort)
                new_vars.append(junk[t.selector])
            return junk[t.selector]
        if isinstance(t, SelApp):
            return SelApp(t.selector, rw_term(t.arg), t.sort)
        if isinstance(t, App):
            return App(t.ctor, tuple(rw_term(a) for a in t.args), t.sort)
        if isinstance(t, Add):
            return Add(tuple(rw_term(a) for a in t.args))
        from .terms import Mul, Neg, Sub

        if isinstance(t, Sub):
            return Sub(rw_term(t.left), rw_term(t.right))
        if isinstance(t, Mul):
            return Mul(rw_term(t.left), rw_term(t.right))
        if isinstance(t, Neg):
            return Neg(rw_term(t.arg))
        return t

    def rw_constraint(c: Constraint) -> Constraint:
        nonlocal test_sites
        if isinstance(c, TestApp):
            if c.arg == target:
                test_sites += 1
                return BoolVal(c.ctor == ctor.name)
            return TestApp(c.ctor, rw_term(c.arg))
        if isinstance(c, Cmp):
            return Cmp(c.op, rw_term(c.left), rw_term(c.right))
        if isinstance(c, And):
            return And(tuple(rw_constraint(p) for p in c.args))
        if isinstance(c, Or):
            return Or(tuple(rw_constraint(p) for p in c.args))
        if isinstance(c, Not):
            return Not(rw_constraint(c.arg))
        return c

    case_eq = Cmp("=", target, App(ctor.name, fields, sort_of(target)))
    constraint = fold_constraint(conj([case_eq, rw_constraint(cl.constraint)]))
    body = tuple(Atom(a.pred, tuple(rw_term(t) for t in a.args)) for a in cl.body)
    head = (
        None
        if cl.head is None
        else Atom(cl.head.pred, tuple(rw_term(t) for t in cl.head.args))
    )
    out = Clause(
        vars=tuple(new_vars),
        constraint=constraint,
        body=body,
        head=head,
        name=f"{cl.name}!{ctor.name}",
    )
    return out, sel_sites, test_sites


def eliminate_selectors_testers(
    system: ChcSystem,
) -> Tuple[ChcSystem, PreprocessReport]:
    """Compile away every selector and tester by per-constructor case splits.

    Clauses whose constraint folds to false (impossible cases) are dropped.
    The result contains no SelApp or TestApp nodes.
    """
    report = PreprocessReport()
    out = ChcSystem(dict(system.datatypes), dict(system.predicates), [])
    work = list(system.clauses)
    for cl in work:
        report.origin.setdefault(cl.name, cl.name)
    while work:
        cl = work.pop(0)
        target = _find_split_target(cl)
        if target is None:
            if fold_constraint(cl.constraint) is not FALSE:
                out.clauses.append(cl)
            continue
        dt = system.datatype_of(sort_of(target))
        produced = 0
        for ctor in dt.constructors:
            case, sels, tests = _rewrite_case(cl, target, ctor, system)
            report.selector_sites += sels
            report.tester_sites += tests
            if fold_constraint(case.constraint) is FALSE:
                continue
            report.origin[case.name] = report.origin.get(cl.name, cl.name)
            work.append(case)
            produced += 1
        report.case_split_clauses += produced
    return out, report


# ======================================================================
# Pass 2: ADT disequality
# ======================================================================

def _adt_neq_sorts(system: ChcSystem) -> List[Sort]:
    found: List[Sort] = []
    for cl in system.clauses:
        for c in _all_constraint_nodes(cl.constraint):
            if isinstance(c, Cmp) and c.op == "!=" and sort_of(c.left).is_adt:
                s = sort_of(c.left)
                if s not in found:
                    found.append(s)
    return found


def _closure_over_fields(system: ChcSystem, sorts: List[Sort]) -> List[Sort]:
    seen: List[Sort] = []
    work = list(sorts)
    while work:
        s = work.pop(0)
        if s in seen:
            continue
        seen.append(s)
        for ctor in system.datatype_of(s).constructors:
            for _, fs in ctor.fields:
                if fs.is_adt and fs not in seen:
                    work.append(fs)
    return seen


def _diseq_defining_clauses(system: ChcSystem, sort: Sort) -> List[Clause]:
    dt = system.datatype_of(sort)
    pred = diseq_pred_name(sort)
    clauses: List[Clause] = []
    k = 0

    def mk_fields(ctor: Constructor, tag: str) -> Tuple[Var, ...]:
        return tuple(
            Var(f"{tag}!{i}", fs) for i, (_, fs) in enumerate(ctor.fields)
        )

    for ci, cj in itertools.permutations(dt.constructors, 2):
        u, w = mk_fields(ci, "u"), mk_fields(cj, "w")
        clauses.append(
            Clause(
                vars=u + w,
                constraint=TRUE,
                body=(),
                head=Atom(
                    pred,
                    (App(ci.name, u, sort), App(cj.name, w, sort)),
                ),
                name=f"{pred}!{k}",
            )
        )
        k += 1
    for ctor in dt.constructors:
        for j, (_, fsort) in enumerate(ctor.fields):
            u, w = mk_fields(ctor, "u"), mk_fields(ctor, "w")
            if fsort.is_int:
                constraint: Constraint = Cmp("!=", u[j], w[j])
                body: Tuple[Atom, ...] = ()
            else:
                constraint = TRUE
                body = (Atom(diseq_pred_name(fsort), (u[j], w[j])),)
            clauses.append(
                Clause(
                    vars=u + w,
                    constraint=constraint,
                    body=body,
                    head=Atom(
                        pred, (App(ctor.name, u, sort), App(ctor.name, w, sort))
                    ),
                    name=f"{pred}!{k}",
                )
            )
            k += 1
    return clauses


def _split_off_adt_neq(
    constraint: Constraint,
) -> List[Tuple[Constraint, List[Tuple[Term, Term]]]]:
    """Rewrite a constraint into cases ``(residual, adt-neq-pairs)``.

    Top-level conjuncts that are ADT disequalities peel off directly; an
    ADT disequality under a disjunction forces distribution of that
    disjunct into separate cases (each case later becomes its own clause).
    """
    if isinstance(constraint, Cmp) and constraint.op == "!=" \
            and sort_of(constraint.left).is_adt:
        return [(TRUE, [(constraint.left, constraint.right)])]
    if isinstance(constraint, And):
        cases: List[Tuple[List[Constraint], List[Tuple[Term, Term]]]] = [([], [])]
        for part in constraint.args:
            next_cases = []
            for sub in _split_off_adt_neq(part):
                for residual, pairs in cases:
                    next_cases.append(
                        (residual + [sub[0]], pairs + sub[1])
                    )
            cases = next_cases
        return [(conj(r), p) for r, p in cases]
    if isinstance(constraint, Or):
        if not any(
            isinstance(c, Cmp) and c.op == "!=" and sort_of(c.left).is_adt
            for part in constraint.args
            for c in _all_constraint_nodes(part)
        ):
            return [(constraint, [])]
        out: List[Tuple[Constraint, List[Tuple[Term, Term]]]] = []
        for part in constraint.args:
            out.extend(_split_off_adt_neq(part))
        return out
    return [(constraint, [])]


def encode_adt_disequality(
    system: ChcSystem,
) -> Tuple[ChcSystem, PreprocessReport]:
    """Replace ADT ``!=`` constraints by generated disequality predicates.

    A system without ADT disequalities is returned unchanged (no diseq
    predicates are declared).
    """
    report = PreprocessReport()
    neq_sorts = _adt_neq_sorts(system)
    if not neq_sorts:
        for cl in system.clauses:
            report.origin[cl.name] = cl.name
        return system, report
    needed = _closure_over_fields(system, neq_sorts)
    out = ChcSystem(dict(system.datatypes), dict(system.predicates), [])
    for s in needed:
        name = diseq_pred_name(s)
        if name in out.predicates:
            raise UnsupportedFeature(f"predicate name {name!r} is reserved")
        out.predicates[name] = (s, s)
    for cl in system.clauses:
        cases = _split_off_adt_neq(cl.constraint)
        if len(cases) == 1 and not cases[0][1]:
            out.clauses.append(cl)
            report.origin[cl.name] = cl.name
            continue
        for i, (residual, pairs) in enumerate(cases):
            atoms = tuple(
                Atom(diseq_pred_name(sort_of(l)), (l, r)) for l, r in pairs
            )
            name = cl.name if len(cases) == 1 else f"{cl.name}!neq!{i}"
            out.clauses.append(
                Clause(
                    vars=cl.vars,
                    constraint=residual,
                    body=cl.body + atoms,
                    head=cl.head,
                    name=name,
                )
            )
            report.origin[name] = cl.name
    for s in needed:
        defs = _diseq_defining_clauses(out, s)
        for d in defs:
            report.origin[d.name] = d.name
        out.clauses.extend(defs)
        report.diseq_clauses += len(defs)
    report.diseq_sorts = tuple(s.name for s in needed)
    return out, report


# ======================================================================
# Pass 3: admissibility augmentation
# ======================================================================

def _used_adt_sorts(system: ChcSystem) -> List[Sort]:
    used: List[Sort] = []
    for sig in system.predicates.values():
        for s in sig:
            if s.is_adt and s not in used:
                used.append(s)
    for cl in system.clauses:
        for v in cl.vars:
            if v.sort.is_adt and v.sort not in used:
                used.append(v.sort)
    return _closure_over_fields(system, used)


def _adm_defining_clauses(system: ChcSystem, sort: Sort) -> List[Clause]:
    dt = system.datatype_of(sort)
    clauses: List[Clause] = []
    for ctor in dt.constructors:
        fields = tuple(
            Var(f"v!{i}", fs) for i, (_, fs) in enumerate(ctor.fields)
        )
        body = tuple(
            Atom(adm_pred_name(v.sort), (v,)) for v in fields if v.sort.is_adt
        )
        clauses.append(
            Clause(
                vars=fields,
                constraint=TRUE,
                body=body,
                head=Atom(adm_pred_name(sort), (App(ctor.name, fields, sort),)),
                name=f"{adm_pred_name(sort)}!{ctor.name}",
            )
        )
    return clauses


def augment_admissibility(
    system: ChcSystem,
) -> Tuple[ChcSystem, PreprocessReport]:
    """Add admissibility atoms for every ADT clause variable, plus the
    defining clauses that make each ``adm!`` predicate total on ground
    terms.  Head-only variables are covered too."""
    report = PreprocessReport()
    for p in system.predicates:
        if is_reserved_pred(p) and p.startswith(ADM_PREFIX):
            raise UnsupportedFeature(f"predicate name {p!r} is reserved")
    sorts = _used_adt_sorts(system)
    out = ChcSystem(dict(system.datatypes), dict(system.predicates), [])
    for s in sorts:
        out.predicates[adm_pred_name(s)] = (s,)
    for cl in system.clauses:
        extra = tuple(
            Atom(adm_pred_name(v.sort), (v,)) for v in cl.vars if v.sort.is_adt
        )
        report.admissibility_atoms += len(extra)
        out.clauses.append(
            Clause(cl.vars, cl.constraint, cl.body + extra, cl.head, cl.name)
        )
        report.origin[cl.name] = cl.name
    for s in sorts:
        for d in _adm_defining_clauses(out, s):
            report.origin[d.name] = d.name
            out.clauses.append(d)
    report.admissibility_sorts = tuple(s.name for s in sorts)
    return out, report


def is_admissibility_clause(cl: Clause) -> bool:
    """Whether a clause defines an admissibility predicate (these are
    skipped when a proof is replayed on the original system)."""
    return cl.head is not None and cl.head.pred.startswith(ADM_PREFIX)


# ======================================================================
# The pipeline
# ======================================================================

def preprocess(
    system: ChcSystem, augment: bool = True
) -> Tuple[ChcSystem, PreprocessReport]:
    """Run selector elimination, disequality encoding, and (unless
    disabled for diagnosis) admissibility augmentation, merging reports."""
    s1, r1 = eliminate_selectors_testers(system)
    s2, r2 = encode_adt_disequality(s1)
    if augment:
        s3, r3 = augment_admissibility(s2)
    else:
        s3, r3 = s2, PreprocessReport(
            origin={cl.name: cl.name for cl in s2.clauses}
        )
    origin: Dict[str, str] = {}
    for name, src in r3.origin.items():
        mid = r2.origin.get(src, src)
        origin[name] = r1.origin.get(mid, mid)
    return s3, PreprocessReport(
        selector_sites=r1.selector_sites,
        tester_sites=r1.tester_sites,
        case_split_clauses=r1.case_split_clauses,
        diseq_sorts=r2.diseq_sorts,
        diseq_clauses=r2.diseq_clauses,
        admissibility_sorts=r3.admissibility_sorts,
        admissibility_atoms=r3.admissibility_atoms,
        origin=origin,
    )
