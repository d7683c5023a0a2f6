"""Catamorphisms: folds from ADT terms to integer tuples.

A catamorphism of degree N maps every ground term of each ADT sort to an
N-tuple of integers, defined by one structure map per constructor.  A
structure map is a tuple of integer expressions over the constructor's
integer fields and the component values of its recursive children.

Template catamorphisms leave integer coefficients symbolic (bounded
parameters); instantiating a template with a parameter assignment yields a
concrete catamorphism.  The template ladder enumerates the search space in
increasing expressiveness: linear maps of degree 1 through 3 with
coefficient bound 1, then degree 3 with doubling bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

from .terms import (
    INT,
    Add,
    App,
    CataliaError,
    ChcSystem,
    IntVal,
    Mul,
    Sort,
    Term,
    Var,
    eval_term,
    fold_term,
    sort_of,
    subst_term,
)


def field_var(index: int) -> Var:
    """Formal variable standing for integer field ``index`` of a constructor."""
    return Var(f"fld!{index}", INT)


def child_var(index: int, component: int) -> Var:
    """Formal variable standing for one fold component of recursive child
    ``index`` of a constructor."""
    return Var(f"rec!{index}!{component}", INT)


@dataclass(frozen=True)
class StructureMap:
    """The fold equations for one constructor.

    ``exprs[k]`` defines component k of the fold of ``C(t_0, ..., t_n)``
    as an integer term over ``field_var(j)`` (for Int fields) and
    ``child_var(j, i)`` (for component i of ADT field j), indexed by field
    position in the constructor declaration.
    """

    ctor: str
    degree: int
    exprs: Tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.exprs) != self.degree:
            raise CataliaError(
                f"structure map for {self.ctor} has {len(self.exprs)} "
                f"expressions for degree {self.degree}"
            )


@dataclass
class Catamorphism:
    """A concrete fold: degree plus one structure map per constructor of
    every ADT sort in the system."""

    degree: int
    maps: Dict[str, Dict[str, StructureMap]]  # sort name -> ctor name -> map

    def structure_map(self, sort: str, ctor: str) -> StructureMap:
        try:
            return self.maps[sort][ctor]
        except KeyError:
            raise CataliaError(
                f"no structure map for constructor {ctor} of sort {sort}"
            ) from None


@dataclass(frozen=True)
class TemplateParam:
    name: str
    lo: int
    hi: int


@dataclass
class TemplateCatamorphism:
    """A catamorphism whose structure-map coefficients are bounded
    symbolic parameters."""

    degree: int
    maps: Dict[str, Dict[str, StructureMap]]
    params: Tuple[TemplateParam, ...]
    label: str = ""

    def grid_size(self) -> int:
        size = 1
        for p in self.params:
            size *= p.hi - p.lo + 1
        return size


#: A parameter assignment: template parameter name to integer value.
ParamAssignment = Dict[str, int]


# ======================================================================
# Evaluation
# ======================================================================

def eval_ground(cata: Catamorphism, term: Term) -> Tuple[int, ...]:
    """Evaluate a catamorphism on a ground ADT term.

    Returns the N-tuple of integer components.  Integer fields may be any
    ground arithmetic term; ADT fields are folded recursively.
    """
    if not isinstance(term, App):
        raise CataliaError(f"eval_ground expects a ground constructor term, got {term!r}")
    env: Dict[str, int] = {}
    for j, arg in enumerate(term.args):
        if sort_of(arg).is_adt:
            sub = eval_ground(cata, arg)
            for i, v in enumerate(sub):
                env[child_var(j, i).name] = v
        else:
            env[field_var(j).name] = eval_term(arg, {})  # type: ignore[assignment]
    smap = cata.structure_map(term.sort.name, term.ctor)
    return tuple(eval_term(e, env) for e in smap.exprs)  # type: ignore[misc]


# ======================================================================
# The default catamorphism
# ======================================================================

def default_catamorphism(system: ChcSystem) -> Catamorphism:
    """The node-count fold, the starting abstraction for every solve.

    Each constructor maps to one plus the sum of its recursive children's
    counts; integer fields are ignored.  Every leaf term therefore
    evaluates to 1, and for example ``S(S(Z))`` evaluates to 3.
    """
    maps: Dict[str, Dict[str, StructureMap]] = {}
    for dt in system.datatypes.values():
        per_ctor: Dict[str, StructureMap] = {}
        for ctor in dt.constructors:
            parts: List[Term] = [IntVal(1)]
            for j, (_, fsort) in enumerate(ctor.fields):
                if fsort.is_adt:
                    parts.append(child_var(j, 0))
            expr = parts[0] if len(parts) == 1 else Add(tuple(parts))
            per_ctor[ctor.name] = StructureMap(ctor.name, 1, (expr,))
        maps[dt.name] = per_ctor
    return Catamorphism(1, maps)


# ======================================================================
# Linear templates and the ladder
# ======================================================================

def linear_template(
    system: ChcSystem, degree: int, bound: int
) -> TemplateCatamorphism:
    """The full linear template of the given degree and coefficient bound.

    Component k of constructor C is an affine combination of every
    component of every recursive child, every integer field, and a free
    constant, each coefficient ranging over [-bound, bound].  For a list
    of integers at degree 1 this is the familiar shape
    ``comb_nil = d`` and ``comb_cons(x, l) = a*l + b*x + c``.
    """
    params: List[TemplateParam] = []
    maps: Dict[str, Dict[str, StructureMap]] = {}

    def mk_param(name: str) -> Var:
        params.append(TemplateParam(name, -bound, bound))
        return Var(name, INT)

    for dt in system.datatypes.values():
        per_ctor: Dict[str, StructureMap] = {}
        for ctor in dt.constructors:
            exprs: List[Term] = []
            for k in range(degree):
                parts: List[Term] = []
                for j, (_, fsort) in enumerate(ctor.fields):
                    if fsort.is_adt:
                        for i in range(degree):
                            coeff = mk_param(f"a!{ctor.name}!{k}!{j}!{i}")
                            parts.append(Mul(coeff, child_var(j, i)))
                    else:
                        coeff = mk_param(f"b!{ctor.name}!{k}!{j}")
                        parts.append(Mul(coeff, field_var(j)))
                parts.append(mk_param(f"c!{ctor.name}!{k}"))
                exprs.append(parts[0] if len(parts) == 1 else Add(tuple(parts)))
            per_ctor[ctor.name] = StructureMap(ctor.name, degree, tuple(exprs))
        maps[dt.name] = per_ctor
    return TemplateCatamorphism(
        degree=degree,
        maps=maps,
        params=tuple(params),
        label=f"lin[deg={degree},bound={bound}]",
    )


def template_ladder(system: ChcSystem, cap: int) -> Iterator[TemplateCatamorphism]:
    """Yield template elements in increasing expressiveness, ``cap`` many.

    The sequence is degrees 1, 2, 3 at coefficient bound 1, then degree 3
    with the bound doubling (2, 4, 8, ...) until the cap is reached.
    """
    shapes: List[Tuple[int, int]] = [(1, 1), (2, 1), (3, 1)]
    bound = 2
    while len(shapes) < cap:
        shapes.append((3, bound))
        bound *= 2
    for degree, b in shapes[:cap]:
        yield linear_template(system, degree, b)


def instantiate(
    template: TemplateCatamorphism, assignment: ParamAssignment
) -> Catamorphism:
    """Substitute a parameter assignment into a template and fold constants.

    Raises CataliaError if the assignment misses a parameter or violates
    its bounds.
    """
    sub: Dict[str, Term] = {}
    for p in template.params:
        if p.name not in assignment:
            raise CataliaError(f"assignment misses template parameter {p.name}")
        v = assignment[p.name]
        if not (p.lo <= v <= p.hi):
            raise CataliaError(
                f"parameter {p.name}={v} outside bounds [{p.lo}, {p.hi}]"
            )
        sub[p.name] = IntVal(v)
    maps: Dict[str, Dict[str, StructureMap]] = {}
    for sort_name, per_ctor in template.maps.items():
        new_ctor: Dict[str, StructureMap] = {}
        for ctor_name, smap in per_ctor.items():
            exprs = tuple(fold_term(subst_term(e, sub)) for e in smap.exprs)
            new_ctor[ctor_name] = StructureMap(ctor_name, smap.degree, exprs)
        maps[sort_name] = new_ctor
    return Catamorphism(template.degree, maps)


def grid_points(template: TemplateCatamorphism) -> Iterator[ParamAssignment]:
    """Enumerate the finite parameter grid in lexicographic order.

    Parameters vary fastest on the right, each running from its lower to
    its upper bound.  This is the deterministic fallback used when the
    backend cannot answer a nonlinear parameter query.
    """
    names = [p.name for p in template.params]
    ranges = [range(p.lo, p.hi + 1) for p in template.params]

    def rec(i: int, acc: Dict[str, int]) -> Iterator[ParamAssignment]:
        if i == len(names):
            yield dict(acc)
            return
        for v in ranges[i]:
            acc[names[i]] = v
            yield from rec(i + 1, acc)

    yield from rec(0, {})
