"""Abstraction of an ADT system to an integer system via a catamorphism.

Every ADT-sorted variable x of a clause becomes N fresh integer variables
``x!0 .. x!(N-1)``; constructor applications inline the catamorphism's
structure maps; ADT equality becomes component-wise integer equality.
The abstracted output contains no ADT sort anywhere.

A model of the abstract system concretizes to a model of the original by
composing with the catamorphism; the ground-instance checker samples that
model as an end-to-end sanity pass.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .catamorphism import Catamorphism, child_var, eval_ground, field_var
from .sampling import random_instantiation
from .smtlib import fold_fun_name
from .terms import (
    INT,
    Add,
    And,
    App,
    Atom,
    BoolVal,
    CataliaError,
    ChcSystem,
    Clause,
    Cmp,
    Constraint,
    FoldApp,
    IntVal,
    Mul,
    Neg,
    Not,
    Or,
    SelApp,
    Sort,
    SortError,
    Sub,
    Term,
    Value,
    Var,
    conj,
    disj,
    eval_constraint,
    eval_term,
    fold_term,
    sort_of,
    subst_term,
)


@dataclass
class AbstractionEnv:
    """The correspondence between an original system and its abstraction.

    ``var_maps`` records, per clause name, how each ADT variable expanded
    into integer component variables.  Clause names and order are shared
    between the two systems, which is what proof replay relies on.
    """

    original: ChcSystem
    abstract: ChcSystem
    cata: Catamorphism
    var_maps: Dict[str, Dict[str, Tuple[str, ...]]] = field(default_factory=dict)


def _component_names(base: str, degree: int, taken: set) -> Tuple[str, ...]:
    """The fresh integer names for one ADT variable, ``base!0 ...``.

    On the rare collision with an existing integer variable the separator
    doubles until the names are fresh.
    """
    sep = "!"
    while True:
        names = tuple(f"{base}{sep}{k}" for k in range(degree))
        if not any(n in taken for n in names):
            taken.update(names)
            return names
        sep += "!"


def abstract_term(
    t: Term, env: Dict[str, Tuple[str, ...]], cata: Catamorphism
) -> Tuple[Term, ...]:
    """Abstract an ADT-sorted term to its N component terms.

    Variables map through ``env``; constructor applications substitute the
    abstracted arguments into the constructor's structure map.
    """
    if isinstance(t, Var):
        try:
            names = env[t.name]
        except KeyError:
            raise CataliaError(f"no abstraction for variable {t.name!r}") from None
        return tuple(Var(n, INT) for n in names)
    if isinstance(t, App):
        sub: Dict[str, Term] = {}
        for j, arg in enumerate(t.args):
            if sort_of(arg).is_adt:
                comps = abstract_term(arg, env, cata)
                for i, c in enumerate(comps):
                    sub[child_var(j, i).name] = c
            else:
                sub[field_var(j).name] = abstract_int_term(arg, env, cata)
        smap = cata.structure_map(t.sort.name, t.ctor)
        return tuple(fold_term(subst_term(e, sub)) for e in smap.exprs)
    if isinstance(t, SelApp):
        raise CataliaError("selector application survived preprocessing")
    raise SortError(f"cannot abstract non-ADT term {t!r} as a tuple")


def abstract_int_term(
    t: Term, env: Dict[str, Tuple[str, ...]], cata: Catamorphism
) -> Term:
    """Integer terms pass through unchanged (their variables keep their
    names; no ADT subterm can occur under arithmetic)."""
    return t


def abstract_constraint(
    c: Constraint, env: Dict[str, Tuple[str, ...]], cata: Catamorphism
) -> Constraint:
    if isinstance(c, BoolVal):
        return c
    if isinstance(c, Cmp):
        ls = sort_of(c.left)
        if ls.is_adt:
            if c.op == "=":
                l = abstract_term(c.left, env, cata)
                r = abstract_term(c.right, env, cata)
                return conj([Cmp("=", a, b) for a, b in zip(l, r)])
            raise CataliaError(
                f"ADT comparison {c.op!r} survived preprocessing"
            )
        return c
    if isinstance(c, And):
        return conj([abstract_constraint(p, env, cata) for p in c.args])
    if isinstance(c, Or):
        return disj([abstract_constraint(p, env, cata) for p in c.args])
    if isinstance(c, Not):
        return Not(abstract_constraint(c.arg, env, cata))
    raise CataliaError(f"cannot abstract constraint {c!r}")


def abstract_atom(
    a: Atom,
    env: Dict[str, Tuple[str, ...]],
    cata: Catamorphism,
    signature: Sequence[Sort],
) -> Atom:
    args: List[Term] = []
    for t, s in zip(a.args, signature):
        if s.is_adt:
            args.extend(abstract_term(t, env, cata))
        else:
            args.append(abstract_int_term(t, env, cata))
    return Atom(a.pred, tuple(args))


def abstract_signature(
    sig: Sequence[Sort], degree: int
) -> Tuple[Sort, ...]:
    out: List[Sort] = []
    for s in sig:
        if s.is_adt:
            out.extend([INT] * degree)
        else:
            out.append(s)
    return tuple(out)


def abstract_clause(
    cl: Clause, cata: Catamorphism, system: ChcSystem
) -> Tuple[Clause, Dict[str, Tuple[str, ...]]]:
    """Abstract one clause; returns the clause and the variable map."""
    taken = {v.name for v in cl.vars}
    env: Dict[str, Tuple[str, ...]] = {}
    new_vars: List[Var] = []
    for v in cl.vars:
        if v.sort.is_adt:
            names = _component_names(v.name, cata.degree, taken)
            env[v.name] = names
            new_vars.extend(Var(n, INT) for n in names)
        else:
            new_vars.append(v)
    constraint = abstract_constraint(cl.constraint, env, cata)
    body = tuple(
        abstract_atom(a, env, cata, system.predicates[a.pred]) for a in cl.body
    )
    head = (
        None
        if cl.head is None
        else abstract_atom(cl.head, env, cata, system.predicates[cl.head.pred])
    )
    return Clause(tuple(new_vars), constraint, body, head, cl.name), env


def abstract_system(system: ChcSystem, cata: Catamorphism) -> AbstractionEnv:
    """Abstract a preprocessed system.  The result's ``abstract`` member is
    a pure integer system with the same clause names in the same order."""
    out = ChcSystem({}, {}, [])
    for pred, sig in system.predicates.items():
        out.predicates[pred] = abstract_signature(sig, cata.degree)
    env = AbstractionEnv(original=system, abstract=out, cata=cata)
    for cl in system.clauses:
        acl, vmap = abstract_clause(cl, cata, system)
        out.clauses.append(acl)
        env.var_maps[cl.name] = vmap
    return env


def assert_adt_free(system: ChcSystem) -> None:
    """Raise if any ADT sort survives in the system (it never should)."""
    from .terms import constraint_terms, subterms

    for sig in system.predicates.values():
        for s in sig:
            if s.is_adt:
                raise CataliaError(f"ADT sort {s} in abstract signature")
    for cl in system.clauses:
        for v in cl.vars:
            if v.sort.is_adt:
                raise CataliaError(
                    f"ADT variable {v.name} in abstract clause {cl.name}"
                )
        terms = list(constraint_terms(cl.constraint))
        for at in list(cl.body) + ([cl.head] if cl.head else []):
            terms.extend(at.args)
        for t in terms:
            for s in subterms(t):
                if sort_of(s).is_adt:
                    raise CataliaError(
                        f"ADT term {s!r} in abstract clause {cl.name}"
                    )


# ======================================================================
# Models
# ======================================================================

@dataclass
class AbstractModel:
    """An interpretation of the abstract predicates: for each predicate, a
    parameter list and a quantifier-free integer formula over it."""

    interps: Dict[str, Tuple[Tuple[Var, ...], Constraint]]

    def formula_for(self, pred: str) -> Tuple[Tuple[Var, ...], Constraint]:
        try:
            return self.interps[pred]
        except KeyError:
            raise CataliaError(f"model has no interpretation for {pred}") from None


@dataclass
class ConcreteModel:
    """A model of the original system: the abstract model composed with
    the catamorphism.  ADT arguments occur only under fold applications."""

    cata: Catamorphism
    interps: Dict[str, Tuple[Tuple[Var, ...], Constraint]]

    def holds(self, pred: str, args: Sequence[Value]) -> bool:
        params, formula = self.interps[pred]
        if len(params) != len(args):
            raise CataliaError(f"arity mismatch applying model of {pred}")
        env = {p.name: v for p, v in zip(params, args)}
        return eval_fold_constraint(formula, env, self.cata)


def eval_fold_term(t: Term, env: Dict[str, Value], cata: Catamorphism) -> Value:
    if isinstance(t, FoldApp):
        base = eval_fold_term(t.arg, env, cata)
        if isinstance(base, int):
            raise SortError("fold applied to an integer value")
        return eval_ground(cata, base)[t.component]
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise CataliaError(f"unbound variable {t.name!r}") from None
    if isinstance(t, IntVal):
        return t.value
    if isinstance(t, Add):
        return sum(eval_fold_term(a, env, cata) for a in t.args)  # type: ignore[misc]
    if isinstance(t, Sub):
        return eval_fold_term(t.left, env, cata) - eval_fold_term(t.right, env, cata)  # type: ignore[operator]
    if isinstance(t, Mul):
        return eval_fold_term(t.left, env, cata) * eval_fold_term(t.right, env, cata)  # type: ignore[operator]
    if isinstance(t, Neg):
        return -eval_fold_term(t.arg, env, cata)  # type: ignore[operator]
    if isinstance(t, App):
        return eval_term(t, env)
    raise CataliaError(f"cannot evaluate {type(t).__name__} in a model formula")


def eval_fold_constraint(
    c: Constraint, env: Dict[str, Value], cata: Catamorphism
) -> bool:
    if isinstance(c, BoolVal):
        return c.value
    if isinstance(c, Cmp):
        lv = eval_fold_term(c.left, env, cata)
        rv = eval_fold_term(c.right, env, cata)
        from .terms import values_equal

        if c.op == "=":
            return values_equal(lv, rv)
        if c.op == "!=":
            return not values_equal(lv, rv)
        if c.op == ">":
            return lv > rv  # type: ignore[operator]
        return lv <= rv  # type: ignore[operator]
    if isinstance(c, And):
        return all(eval_fold_constraint(p, env, cata) for p in c.args)
    if isinstance(c, Or):
        return any(eval_fold_constraint(p, env, cata) for p in c.args)
    if isinstance(c, Not):
        return not eval_fold_constraint(c.arg, env, cata)
    raise CataliaError(f"cannot evaluate constraint {c!r}")


def concretize_model(
    model: AbstractModel, env: AbstractionEnv
) -> ConcreteModel:
    """Compose an abstract model with the catamorphism.

    For predicate P with original signature (s1..sm), the concrete
    interpretation is the abstract formula with the component parameters
    of each ADT argument replaced by fold applications of that argument.
    """
    degree = env.cata.degree
    interps: Dict[str, Tuple[Tuple[Var, ...], Constraint]] = {}
    for pred, sig in env.original.predicates.items():
        params, formula = model.formula_for(pred)
        want = len(abstract_signature(sig, degree))
        if len(params) != want:
            raise CataliaError(
                f"abstract model of {pred} has {len(params)} parameters, "
                f"expected {want}"
            )
        orig_params = tuple(Var(f"x!{i}", s) for i, s in enumerate(sig))
        sub: Dict[str, Term] = {}
        k = 0
        for op, s in zip(orig_params, sig):
            if s.is_adt:
                for comp in range(degree):
                    sub[params[k].name] = FoldApp(s.name, comp, op)
                    k += 1
            else:
                sub[params[k].name] = op
                k += 1

        def substitute(c: Constraint) -> Constraint:
            if isinstance(c, Cmp):
                return Cmp(c.op, subst_term(c.left, sub), subst_term(c.right, sub))
            if isinstance(c, And):
                return And(tuple(substitute(p) for p in c.args))
            if isinstance(c, Or):
                return Or(tuple(substitute(p) for p in c.args))
            if isinstance(c, Not):
                return Not(substitute(c.arg))
            return c

        interps[pred] = (orig_params, substitute(formula))
    return ConcreteModel(cata=env.cata, interps=interps)


@dataclass
class Violation:
    clause: str
    env: Dict[str, Value]


def check_model_on_ground_instances(
    model: ConcreteModel,
    system: ChcSystem,
    samples: int,
    seed: int,
    max_term_size: int = 6,
) -> List[Violation]:
    """Sample random ground instantiations of every clause and report the
    instances where the body holds but the head does not.

    A sound model produces an empty list; a nonempty list indicates a bug
    upstream, so the driver surfaces it loudly rather than hiding it.
    """
    rng = random.Random(seed)
    violations: List[Violation] = []
    for _ in range(samples):
        for cl in system.clauses:
            env = random_instantiation(rng, system, cl, max_term_size)
            try:
                if not eval_clause_under_model(cl, env, model):
                    violations.append(Violation(cl.name, env))
            except CataliaError:
                raise
    return violations


def eval_clause_under_model(
    cl: Clause, env: Dict[str, Value], model: ConcreteModel
) -> bool:
    """Whether one ground instance of a clause holds under a model."""
    if not eval_constraint(cl.constraint, env):
        return True
    for at in cl.body:
        args = [eval_term(t, env) for t in at.args]
        if not model.holds(at.pred, args):
            return True
    if cl.head is None:
        return False
    args = [eval_term(t, env) for t in cl.head.args]
    return model.holds(cl.head.pred, args)


# ======================================================================
# Model serialization
# ======================================================================

def format_fold_defs(cata: Catamorphism, system: ChcSystem) -> str:
    """Render a catamorphism as define-fun-rec blocks, one per integer
    component, pattern-matching over each datatype's constructors."""
    lines: List[str] = []
    for sort_name, per_ctor in cata.maps.items():
        dt = system.datatypes[sort_name]
        for comp in range(cata.degree):
            branches: List[str] = []
            for ctor in dt.constructors:
                smap = per_ctor[ctor.name]
                pat_vars = [f"p!{j}" for j in range(ctor.arity)]
                sub: Dict[str, Term] = {}
                for j, (_, fs) in enumerate(ctor.fields):
                    if fs.is_adt:
                        for i in range(cata.degree):
                            sub[child_var(j, i).name] = FoldApp(
                                fs.name, i, Var(pat_vars[j], fs)
                            )
                    else:
                        sub[field_var(j).name] = Var(pat_vars[j], INT)
                body = format_fold_term(subst_term(smap.exprs[comp], sub))
                pattern = (
                    ctor.name
                    if not ctor.fields
                    else "(" + ctor.name + " " + " ".join(pat_vars) + ")"
                )
                branches.append(f"({pattern} {body})")
            lines.append(
                f"(define-fun-rec {fold_fun_name(sort_name, comp)} "
                f"((t {sort_name})) Int (match t ({' '.join(branches)})))"
            )
    return "\n".join(lines)


def format_concrete_model(model: ConcreteModel, system: ChcSystem) -> str:
    """Render a concrete model as SMT-LIB2 definitions: one recursive
    function per catamorphism component, one define-fun per predicate."""
    lines: List[str] = [format_fold_defs(model.cata, system)] if system.datatypes else []
    for pred, (params, formula) in model.interps.items():
        sig = " ".join(f"({p.name} {p.sort.name})" for p in params)
        lines.append(
            f"(define-fun {pred} ({sig}) Bool {format_fold_constraint(formula)})"
        )
    return "\n".join(lines) + "\n"


def format_fold_term(t: Term) -> str:
    from .smtlib import format_term

    return format_term(t)


def format_fold_constraint(c: Constraint) -> str:
    from .smtlib import format_constraint

    return format_constraint(c)
