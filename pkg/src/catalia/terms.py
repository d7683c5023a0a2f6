"""Core term language for constrained Horn clauses over ADTs and integers.

Sorts are either the built-in integer sort or a declared algebraic data
type.  Terms are variables, integer literals, linear arithmetic, constructor
applications, selector applications (only before preprocessing), and fold
applications (only inside encoded constraints and concretized models).
Constraints are quantifier-free boolean combinations of comparisons; clause
bodies are negation-free, while the extended fragment used by proof
obligations also admits negation.

Everything here is immutable and hashable so terms can be shared freely,
deduplicated, and used as dictionary keys.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union


class CataliaError(Exception):
    """Base class for all errors raised by this package."""


class SortError(CataliaError):
    """An ill-sorted term, constraint, or clause."""


class UnsupportedFeature(CataliaError):
    """Input uses a feature outside the supported CHC fragment."""


# ======================================================================
# Sorts and data type declarations
# ======================================================================

@dataclass(frozen=True)
class Sort:
    """A sort: the integer sort or a declared ADT sort, identified by name."""

    name: str

    @property
    def is_int(self) -> bool:
        return self.name == "Int"

    @property
    def is_adt(self) -> bool:
        return self.name != "Int"

    def __str__(self) -> str:
        return self.name


INT = Sort("Int")


@dataclass(frozen=True)
class Constructor:
    """A constructor with named, sorted fields in declaration order."""

    name: str
    fields: Tuple[Tuple[str, Sort], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.fields)

    def field_sorts(self) -> Tuple[Sort, ...]:
        return tuple(s for _, s in self.fields)

    def selector_index(self, selector: str) -> int:
        for i, (sel, _) in enumerate(self.fields):
            if sel == selector:
                return i
        raise KeyError(selector)


@dataclass(frozen=True)
class Datatype:
    """A monomorphic algebraic data type: a name and its constructors."""

    name: str
    constructors: Tuple[Constructor, ...]

    @property
    def sort(self) -> Sort:
        return Sort(self.name)

    def constructor(self, name: str) -> Constructor:
        for ctor in self.constructors:
            if ctor.name == name:
                return ctor
        raise KeyError(name)


# ======================================================================
# Terms
# ======================================================================

@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IntVal:
    value: int

    sort = INT

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Add:
    """N-ary integer addition."""

    args: Tuple["Term", ...]

    sort = INT


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"

    sort = INT


@dataclass(frozen=True)
class Mul:
    """Integer multiplication.

    Clause constraints only allow one factor to be a literal; the sort
    checker enforces that.  Encoded synthesis constraints may multiply two
    parameters, which is why the node itself is not restricted.
    """

    left: "Term"
    right: "Term"

    sort = INT


@dataclass(frozen=True)
class Neg:
    arg: "Term"

    sort = INT


@dataclass(frozen=True)
class App:
    """Constructor application.  ``sort`` is the constructed ADT sort."""

    ctor: str
    args: Tuple["Term", ...]
    sort: Sort


@dataclass(frozen=True)
class SelApp:
    """Selector application; eliminated by preprocessing."""

    selector: str
    arg: "Term"
    sort: Sort


@dataclass(frozen=True)
class FoldApp:
    """One integer component of a catamorphism applied to an ADT term.

    ``family`` names the catamorphism (one per ADT sort family),
    ``component`` is the tuple index in ``range(degree)``.  Fold
    applications appear only in encoded constraints and concretized
    models, never in parsed systems.
    """

    family: str
    component: int
    arg: "Term"

    sort = INT


Term = Union[Var, IntVal, Add, Sub, Mul, Neg, App, SelApp, FoldApp]


# ======================================================================
# Constraints
# ======================================================================

#: Comparison operators of the core fragment.  ``<`` and ``>=`` are
#: normalized away at parse time; ``!=`` on ADT sorts only survives until
#: the disequality-encoding pass.
CMP_OPS = ("=", "!=", ">", "<=")


@dataclass(frozen=True)
class BoolVal:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class TestApp:
    """Tester atom ``(_ is C)(t)``; eliminated by preprocessing."""

    ctor: str
    arg: Term


@dataclass(frozen=True)
class And:
    args: Tuple["Constraint", ...]


@dataclass(frozen=True)
class Or:
    args: Tuple["Constraint", ...]


@dataclass(frozen=True)
class Not:
    """Negation.  Only the extended fragment (proof obligations and
    encoded test constraints) may contain it; clause bodies are
    negation-free."""

    arg: "Constraint"


Constraint = Union[BoolVal, Cmp, TestApp, And, Or, Not]

TRUE = BoolVal(True)
FALSE = BoolVal(False)


def conj(parts: Sequence[Constraint]) -> Constraint:
    """Conjunction with unit/absorption simplification and flattening."""
    flat: List[Constraint] = []
    for p in parts:
        if isinstance(p, BoolVal):
            if not p.value:
                return FALSE
            continue
        if isinstance(p, And):
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts: Sequence[Constraint]) -> Constraint:
    """Disjunction with unit/absorption simplification and flattening."""
    flat: List[Constraint] = []
    for p in parts:
        if isinstance(p, BoolVal):
            if p.value:
                return TRUE
            continue
        if isinstance(p, Or):
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def conjuncts_of(c: Constraint) -> Tuple[Constraint, ...]:
    if isinstance(c, And):
        return c.args
    if isinstance(c, BoolVal) and c.value:
        return ()
    return (c,)


# ======================================================================
# Clauses and systems
# ======================================================================

@dataclass(frozen=True)
class Atom:
    """An application of an uninterpreted predicate."""

    pred: str
    args: Tuple[Term, ...]


@dataclass(frozen=True)
class Clause:
    """A constrained Horn clause ``head <= constraint /\\ body``.

    ``head`` is ``None`` for goal clauses (head ``false``).  ``vars`` lists
    the quantified variables in a fixed order; every free variable of the
    constraint, body, and head must appear in it.
    """

    vars: Tuple[Var, ...]
    constraint: Constraint
    body: Tuple[Atom, ...]
    head: Optional[Atom]
    name: str = ""

    @property
    def is_goal(self) -> bool:
        return self.head is None

    @property
    def is_fact(self) -> bool:
        return not self.body and self.head is not None


@dataclass
class ChcSystem:
    """A CHC satisfiability problem: data types, predicate signatures,
    and clauses.

    Predicate and datatype dictionaries preserve declaration order, which
    the printer relies on for stable output.
    """

    datatypes: Dict[str, Datatype] = field(default_factory=dict)
    predicates: Dict[str, Tuple[Sort, ...]] = field(default_factory=dict)
    clauses: List[Clause] = field(default_factory=list)

    def datatype_of(self, sort: Sort) -> Datatype:
        try:
            return self.datatypes[sort.name]
        except KeyError:
            raise SortError(f"unknown ADT sort {sort.name!r}") from None

    def selector_site(self, selector: str) -> Tuple[Datatype, Constructor, int]:
        """Resolve a selector name to (datatype, constructor, field index)."""
        for dt in self.datatypes.values():
            for ctor in dt.constructors:
                for i, (sel, _) in enumerate(ctor.fields):
                    if sel == selector:
                        return dt, ctor, i
        raise SortError(f"unknown selector {selector!r}")

    def constructor_sort(self, ctor_name: str) -> Sort:
        for dt in self.datatypes.values():
            for ctor in dt.constructors:
                if ctor.name == ctor_name:
                    return dt.sort
        raise SortError(f"unknown constructor {ctor_name!r}")


# ======================================================================
# Traversal helpers
# ======================================================================

def subterms(t: Term) -> Iterator[Term]:
    """Yield ``t`` and all its subterms, preorder."""
    yield t
    if isinstance(t, Add):
        for a in t.args:
            yield from subterms(a)
    elif isinstance(t, (Sub, Mul)):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, Neg):
        yield from subterms(t.arg)
    elif isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
    elif isinstance(t, (SelApp, FoldApp)):
        yield from subterms(t.arg)


def constraint_terms(c: Constraint) -> Iterator[Term]:
    """Yield every term occurring in ``c``."""
    if isinstance(c, Cmp):
        yield c.left
        yield c.right
    elif isinstance(c, TestApp):
        yield c.arg
    elif isinstance(c, (And, Or)):
        for p in c.args:
            yield from constraint_terms(p)
    elif isinstance(c, Not):
        yield from constraint_terms(c.arg)


def term_vars(t: Term) -> Iterator[Var]:
    for s in subterms(t):
        if isinstance(s, Var):
            yield s


def constraint_vars(c: Constraint) -> Iterator[Var]:
    for t in constraint_terms(c):
        yield from term_vars(t)


def atom_vars(a: Atom) -> Iterator[Var]:
    for t in a.args:
        yield from term_vars(t)


def clause_free_vars(cl: Clause) -> Tuple[Var, ...]:
    """Free variables of a clause in first-occurrence order."""
    seen: Dict[str, Var] = {}

    def visit(vs: Iterable[Var]) -> None:
        for v in vs:
            seen.setdefault(v.name, v)

    visit(constraint_vars(cl.constraint))
    for at in cl.body:
        visit(atom_vars(at))
    if cl.head is not None:
        visit(atom_vars(cl.head))
    return tuple(seen.values())


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in subterms(t))


# ======================================================================
# Substitution
# ======================================================================

Subst = Dict[str, Term]


def subst_term(t: Term, sub: Subst) -> Term:
    if isinstance(t, Var):
        return sub.get(t.name, t)
    if isinstance(t, IntVal):
        return t
    if isinstance(t, Add):
        return Add(tuple(subst_term(a, sub) for a in t.args))
    if isinstance(t, Sub):
        return Sub(subst_term(t.left, sub), subst_term(t.right, sub))
    if isinstance(t, Mul):
        return Mul(subst_term(t.left, sub), subst_term(t.right, sub))
    if isinstance(t, Neg):
        return Neg(subst_term(t.arg, sub))
    if isinstance(t, App):
        return App(t.ctor, tuple(subst_term(a, sub) for a in t.args), t.sort)
    if isinstance(t, SelApp):
        return SelApp(t.selector, subst_term(t.arg, sub), t.sort)
    if isinstance(t, FoldApp):
        return FoldApp(t.family, t.component, subst_term(t.arg, sub))
    raise TypeError(f"not a term: {t!r}")


def subst_constraint(c: Constraint, sub: Subst) -> Constraint:
    if isinstance(c, BoolVal):
        return c
    if isinstance(c, Cmp):
        return Cmp(c.op, subst_term(c.left, sub), subst_term(c.right, sub))
    if isinstance(c, TestApp):
        return TestApp(c.ctor, subst_term(c.arg, sub))
    if isinstance(c, And):
        return And(tuple(subst_constraint(p, sub) for p in c.args))
    if isinstance(c, Or):
        return Or(tuple(subst_constraint(p, sub) for p in c.args))
    if isinstance(c, Not):
        return Not(subst_constraint(c.arg, sub))
    raise TypeError(f"not a constraint: {c!r}")


def subst_atom(a: Atom, sub: Subst) -> Atom:
    return Atom(a.pred, tuple(subst_term(t, sub) for t in a.args))


def rename_clause(cl: Clause, suffix: str) -> Tuple[Clause, Subst]:
    """Freshen every clause variable by appending ``suffix`` to its name.

    Returns the renamed clause and the renaming substitution.
    """
    sub: Subst = {v.name: Var(v.name + suffix, v.sort) for v in cl.vars}
    renamed = Clause(
        vars=tuple(Var(v.name + suffix, v.sort) for v in cl.vars),
        constraint=subst_constraint(cl.constraint, sub),
        body=tuple(subst_atom(a, sub) for a in cl.body),
        head=None if cl.head is None else subst_atom(cl.head, sub),
        name=cl.name,
    )
    return renamed, sub


# ======================================================================
# Sort checking
# ======================================================================

def sort_of(t: Term) -> Sort:
    """The sort carried by a term node.  Purely syntactic; use
    :func:`check_sorts` to validate against declarations."""
    if isinstance(t, (Var, App, SelApp)):
        return t.sort
    return INT


def _check_term(t: Term, system: ChcSystem, linear: bool) -> None:
    if isinstance(t, Var):
        if t.sort.is_adt:
            system.datatype_of(t.sort)
        return
    if isinstance(t, IntVal):
        return
    if isinstance(t, Add):
        for a in t.args:
            if sort_of(a).is_adt:
                raise SortError(f"ADT operand in addition: {a!r}")
            _check_term(a, system, linear)
        return
    if isinstance(t, (Sub, Mul)):
        for a in (t.left, t.right):
            if sort_of(a).is_adt:
                raise SortError(f"ADT operand in arithmetic: {a!r}")
            _check_term(a, system, linear)
        if isinstance(t, Mul) and linear:
            def is_const(x: Term) -> bool:
                return isinstance(x, IntVal) or (
                    isinstance(x, Neg) and isinstance(x.arg, IntVal)
                )
            if not (is_const(t.left) or is_const(t.right)):
                raise UnsupportedFeature(
                    "nonlinear multiplication in clause constraint"
                )
        return
    if isinstance(t, Neg):
        if sort_of(t.arg).is_adt:
            raise SortError(f"ADT operand in negation: {t.arg!r}")
        _check_term(t.arg, system, linear)
        return
    if isinstance(t, App):
        dt = system.datatype_of(t.sort)
        ctor = dt.constructor(t.ctor)
        if len(t.args) != ctor.arity:
            raise SortError(
                f"constructor {t.ctor} expects {ctor.arity} args, got {len(t.args)}"
            )
        for a, (_, fsort) in zip(t.args, ctor.fields):
            if sort_of(a) != fsort:
                raise SortError(
                    f"field of {t.ctor} expects sort {fsort}, got {sort_of(a)}"
                )
            _check_term(a, system, linear)
        return
    if isinstance(t, SelApp):
        dt, ctor, idx = system.selector_site(t.selector)
        if sort_of(t.arg) != dt.sort:
            raise SortError(
                f"selector {t.selector} applies to {dt.sort}, got {sort_of(t.arg)}"
            )
        if ctor.fields[idx][1] != t.sort:
            raise SortError(f"selector {t.selector} result sort mismatch")
        _check_term(t.arg, system, linear)
        return
    if isinstance(t, FoldApp):
        raise UnsupportedFeature("fold application inside a clause system")
    raise TypeError(f"not a term: {t!r}")


def _check_constraint(c: Constraint, system: ChcSystem, allow_neg: bool) -> None:
    if isinstance(c, BoolVal):
        return
    if isinstance(c, Cmp):
        if c.op not in CMP_OPS:
            raise SortError(f"unknown comparison {c.op!r}")
        ls, rs = sort_of(c.left), sort_of(c.right)
        if ls != rs:
            raise SortError(f"comparison of {ls} against {rs}")
        if ls.is_adt and c.op not in ("=", "!="):
            raise SortError(f"ordering comparison on ADT sort {ls}")
        _check_term(c.left, system, linear=True)
        _check_term(c.right, system, linear=True)
        return
    if isinstance(c, TestApp):
        want = system.constructor_sort(c.ctor)
        if sort_of(c.arg) != want:
            raise SortError(f"tester (_ is {c.ctor}) applied to {sort_of(c.arg)}")
        _check_term(c.arg, system, linear=True)
        return
    if isinstance(c, (And, Or)):
        for p in c.args:
            _check_constraint(p, system, allow_neg)
        return
    if isinstance(c, Not):
        if not allow_neg:
            raise UnsupportedFeature("negation in clause constraint")
        _check_constraint(c.arg, system, allow_neg)
        return
    raise TypeError(f"not a constraint: {c!r}")


def check_sorts(system: ChcSystem) -> None:
    """Validate a whole system against its declarations.

    Raises SortError for ill-sorted terms, atoms with wrong signatures, or
    clause variables shadowing each other, and UnsupportedFeature for
    Bool-sorted constructor fields and nonlinear clause arithmetic.
    """
    for dt in system.datatypes.values():
        if not dt.constructors:
            raise SortError(f"datatype {dt.name} has no constructors")
        for ctor in dt.constructors:
            for sel, fsort in ctor.fields:
                if fsort.name == "Bool":
                    raise UnsupportedFeature(
                        f"Bool-sorted field {sel!r} in constructor {ctor.name}"
                    )
                if fsort.is_adt and fsort.name not in system.datatypes:
                    raise SortError(
                        f"field {sel!r} of {ctor.name} has undeclared sort {fsort}"
                    )
    for cl in system.clauses:
        names = [v.name for v in cl.vars]
        if len(set(names)) != len(names):
            raise SortError(f"duplicate quantified variable in clause {cl.name!r}")
        scope = {v.name: v.sort for v in cl.vars}

        def check_scoped(vs: Iterable[Var]) -> None:
            for v in vs:
                declared = scope.get(v.name)
                if declared is None:
                    raise SortError(
                        f"unquantified variable {v.name!r} in clause {cl.name!r}"
                    )
                if declared != v.sort:
                    raise SortError(
                        f"variable {v.name!r} used at sort {v.sort}, "
                        f"declared {declared}"
                    )

        check_scoped(constraint_vars(cl.constraint))
        _check_constraint(cl.constraint, system, allow_neg=False)
        atoms = list(cl.body) + ([cl.head] if cl.head is not None else [])
        for at in atoms:
            sig = system.predicates.get(at.pred)
            if sig is None:
                raise SortError(f"undeclared predicate {at.pred!r}")
            if len(at.args) != len(sig):
                raise SortError(
                    f"predicate {at.pred} expects {len(sig)} args, got {len(at.args)}"
                )
            for arg, want in zip(at.args, sig):
                if sort_of(arg) != want:
                    raise SortError(
                        f"argument of {at.pred} has sort {sort_of(arg)}, "
                        f"expected {want}"
                    )
                _check_term(arg, system, linear=True)
                check_scoped(term_vars(arg))


# ======================================================================
# Ground evaluation
# ======================================================================

#: A ground value: a python int for Int, a ground constructor Term for ADTs.
Value = Union[int, Term]


def eval_term(t: Term, env: Dict[str, Value]) -> Value:
    """Evaluate a selector-free, fold-free term under a ground environment."""
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise CataliaError(f"unbound variable {t.name!r}") from None
    if isinstance(t, IntVal):
        return t.value
    if isinstance(t, Add):
        return sum(_as_int(eval_term(a, env)) for a in t.args)
    if isinstance(t, Sub):
        return _as_int(eval_term(t.left, env)) - _as_int(eval_term(t.right, env))
    if isinstance(t, Mul):
        return _as_int(eval_term(t.left, env)) * _as_int(eval_term(t.right, env))
    if isinstance(t, Neg):
        return -_as_int(eval_term(t.arg, env))
    if isinstance(t, App):
        vals = [eval_term(a, env) for a in t.args]
        args = tuple(IntVal(v) if isinstance(v, int) else v for v in vals)
        return App(t.ctor, args, t.sort)
    raise CataliaError(f"cannot evaluate {type(t).__name__} node")


def _as_int(v: Value) -> int:
    if isinstance(v, int):
        return v
    raise SortError(f"expected an integer value, got {v!r}")


def values_equal(a: Value, b: Value) -> bool:
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, int) or isinstance(b, int):
        return False
    return a == b  # ground constructor terms compare structurally


def eval_constraint(c: Constraint, env: Dict[str, Value]) -> bool:
    """Evaluate a tester-free ground constraint under an environment."""
    if isinstance(c, BoolVal):
        return c.value
    if isinstance(c, Cmp):
        lv, rv = eval_term(c.left, env), eval_term(c.right, env)
        if c.op == "=":
            return values_equal(lv, rv)
        if c.op == "!=":
            return not values_equal(lv, rv)
        if c.op == ">":
            return _as_int(lv) > _as_int(rv)
        if c.op == "<=":
            return _as_int(lv) <= _as_int(rv)
        raise CataliaError(f"unknown comparison {c.op!r}")
    if isinstance(c, And):
        return all(eval_constraint(p, env) for p in c.args)
    if isinstance(c, Or):
        return any(eval_constraint(p, env) for p in c.args)
    if isinstance(c, Not):
        return not eval_constraint(c.arg, env)
    if isinstance(c, TestApp):
        v = eval_term(c.arg, env)
        if isinstance(v, App):
            return v.ctor == c.ctor
        raise SortError(f"tester applied to non-ADT value {v!r}")
    raise TypeError(f"not a constraint: {c!r}")


# ======================================================================
# Ground term enumeration
# ======================================================================

def term_size(t: Term) -> int:
    """Number of constructor applications in a ground ADT term."""
    if isinstance(t, App):
        return 1 + sum(term_size(a) for a in t.args if sort_of(a).is_adt)
    return 0


def enumerate_ground_terms(
    system: ChcSystem,
    sort: Sort,
    max_size: int,
    int_pool: Sequence[int] = (0, 1),
) -> List[Term]:
    """All ground terms of ``sort`` with at most ``max_size`` constructor
    nodes, integer fields drawn from ``int_pool``.  Intended for oracles
    and small feasibility sweeps; blows up quickly by design of the domain.
    """
    if sort.is_int:
        return [IntVal(v) for v in int_pool]
    dt = system.datatype_of(sort)
    memo: Dict[Tuple[str, int], List[Term]] = {}

    def build(sname: str, budget: int) -> List[Term]:
        key = (sname, budget)
        if key in memo:
            return memo[key]
        out: List[Term] = []
        if budget >= 1:
            for ctor in system.datatypes[sname].constructors:
                child_sorts = ctor.field_sorts()
                pools: List[List[Term]] = []
                for cs in child_sorts:
                    if cs.is_int:
                        pools.append([IntVal(v) for v in int_pool])
                    else:
                        pools.append(build(cs.name, budget - 1))
                for combo in itertools.product(*pools):
                    cand = App(ctor.name, tuple(combo), Sort(sname))
                    if term_size(cand) <= budget:
                        out.append(cand)
        memo[key] = out
        return out

    return build(dt.name, max_size)


# ======================================================================
# Constant folding
# ======================================================================

def fold_term(t: Term) -> Term:
    """Fold constant arithmetic and drop additive/multiplicative units."""
    if isinstance(t, Add):
        args = [fold_term(a) for a in t.args]
        const = sum(a.value for a in args if isinstance(a, IntVal))
        rest = [a for a in args if not isinstance(a, IntVal)]
        if const != 0 or not rest:
            rest.append(IntVal(const))
        if len(rest) == 1:
            return rest[0]
        return Add(tuple(rest))
    if isinstance(t, Sub):
        l, r = fold_term(t.left), fold_term(t.right)
        if isinstance(l, IntVal) and isinstance(r, IntVal):
            return IntVal(l.value - r.value)
        if isinstance(r, IntVal) and r.value == 0:
            return l
        return Sub(l, r)
    if isinstance(t, Mul):
        l, r = fold_term(t.left), fold_term(t.right)
        if isinstance(l, IntVal) and isinstance(r, IntVal):
            return IntVal(l.value * r.value)
        for c, other in ((l, r), (r, l)):
            if isinstance(c, IntVal):
                if c.value == 0:
                    return IntVal(0)
                if c.value == 1:
                    return other
        return Mul(l, r)
    if isinstance(t, Neg):
        a = fold_term(t.arg)
        if isinstance(a, IntVal):
            return IntVal(-a.value)
        return Neg(a)
    if isinstance(t, App):
        return App(t.ctor, tuple(fold_term(a) for a in t.args), t.sort)
    if isinstance(t, SelApp):
        return SelApp(t.selector, fold_term(t.arg), t.sort)
    if isinstance(t, FoldApp):
        return FoldApp(t.family, t.component, fold_term(t.arg))
    return t


def fold_constraint(c: Constraint) -> Constraint:
    """Fold constants inside a constraint and decide ground comparisons."""
    if isinstance(c, Cmp):
        l, r = fold_term(c.left), fold_term(c.right)
        if isinstance(l, IntVal) and isinstance(r, IntVal):
            if c.op == "=":
                return BoolVal(l.value == r.value)
            if c.op == "!=":
                return BoolVal(l.value != r.value)
            if c.op == ">":
                return BoolVal(l.value > r.value)
            if c.op == "<=":
                return BoolVal(l.value <= r.value)
        if c.op in ("=", "!=") and isinstance(l, App) and isinstance(r, App):
            # Free constructors: equal heads decompose into field
            # comparisons, distinct heads decide the atom outright.
            if l.ctor != r.ctor:
                return BoolVal(c.op == "!=")
            pairs = [
                fold_constraint(Cmp(c.op, a, b)) for a, b in zip(l.args, r.args)
            ]
            return conj(pairs) if c.op == "=" else disj(pairs)
        if c.op in ("=", "!=") and l == r:
            return BoolVal(c.op == "=")
        return Cmp(c.op, l, r)
    if isinstance(c, And):
        return conj([fold_constraint(p) for p in c.args])
    if isinstance(c, Or):
        return disj([fold_constraint(p) for p in c.args])
    if isinstance(c, Not):
        inner = fold_constraint(c.arg)
        if isinstance(inner, BoolVal):
            return BoolVal(not inner.value)
        return Not(inner)
    if isinstance(c, TestApp):
        return TestApp(c.ctor, fold_term(c.arg))
    return c


# ======================================================================
# Alpha equivalence
# ======================================================================

def _canon_clause(cl: Clause) -> tuple:
    """Canonical form of a clause under variable renaming.

    Variables are numbered by first occurrence in a fixed traversal
    (constraint, body atoms, head), which makes two alpha-equivalent
    clauses produce identical forms.
    """
    order: Dict[str, int] = {}

    def num(v: Var) -> tuple:
        if v.name not in order:
            order[v.name] = len(order)
        return ("v", order[v.name], v.sort.name)

    def ct(t: Term) -> tuple:
        if isinstance(t, Var):
            return num(t)
        if isinstance(t, IntVal):
            return ("i", t.value)
        if isinstance(t, Add):
            return ("+",) + tuple(ct(a) for a in t.args)
        if isinstance(t, Sub):
            return ("-", ct(t.left), ct(t.right))
        if isinstance(t, Mul):
            return ("*", ct(t.left), ct(t.right))
        if isinstance(t, Neg):
            return ("neg", ct(t.arg))
        if isinstance(t, App):
            return ("app", t.ctor) + tuple(ct(a) for a in t.args)
        if isinstance(t, SelApp):
            return ("sel", t.selector, ct(t.arg))
        if isinstance(t, FoldApp):
            return ("fold", t.family, t.component, ct(t.arg))
        raise TypeError(repr(t))

    def cc(c: Constraint) -> tuple:
        if isinstance(c, BoolVal):
            return ("b", c.value)
        if isinstance(c, Cmp):
            return ("cmp", c.op, ct(c.left), ct(c.right))
        if isinstance(c, TestApp):
            return ("is", c.ctor, ct(c.arg))
        if isinstance(c, And):
            return ("and",) + tuple(cc(p) for p in c.args)
        if isinstance(c, Or):
            return ("or",) + tuple(cc(p) for p in c.args)
        if isinstance(c, Not):
            return ("not", cc(c.arg))
        raise TypeError(repr(c))

    def ca(a: Atom) -> tuple:
        return ("atom", a.pred) + tuple(ct(t) for t in a.args)

    return (
        cc(cl.constraint),
        tuple(ca(a) for a in cl.body),
        None if cl.head is None else ca(cl.head),
    )


def alpha_equivalent(s1: ChcSystem, s2: ChcSystem) -> bool:
    """Whether two systems agree up to per-clause variable renaming.

    Declarations must match exactly (same names, same order); clauses are
    compared pairwise in order.
    """
    if list(s1.datatypes) != list(s2.datatypes):
        return False
    for name in s1.datatypes:
        if s1.datatypes[name] != s2.datatypes[name]:
            return False
    if s1.predicates != s2.predicates:
        return False
    if len(s1.clauses) != len(s2.clauses):
        return False
    return all(
        _canon_clause(a) == _canon_clause(b)
        for a, b in zip(s1.clauses, s2.clauses)
    )
