"""Search for catamorphism parameters that block spurious derivations.

Each spurious counterexample leaves behind an obligation: its formula
must become unsatisfiable once datatype equalities are read through the
fold.  Candidate folds come from a bounded template; the loop alternates
between proposing parameters consistent with everything learned so far
and testing the proposal against each obligation.  A failed test yields
a ground witness, and requiring the witness to violate the obligation
under *symbolic* parameters produces a new (generally nonlinear)
constraint on the parameter space.  The loop stops when a proposal
passes every obligation or the parameter space is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .abstraction import format_fold_defs
from .backend import BackendConfig, BackendError, SmtResult, smt_check_sat
from .catamorphism import (
    Catamorphism,
    ParamAssignment,
    TemplateCatamorphism,
    child_var,
    field_var,
    grid_points,
    instantiate,
)
from .counterexample import Counterexample
from .terms import (
    App,
    CataliaError,
    ChcSystem,
    Cmp,
    Constraint,
    FoldApp,
    INT,
    IntVal,
    Not,
    Sort,
    TRUE,
    Term,
    Var,
    conj,
    conjuncts_of,
    eval_constraint,
    eval_term,
    fold_constraint,
    fold_term,
    subst_term,
)

GRID_FALLBACK_CAP = 200_000


class NonGroundApplication(CataliaError):
    """A fold was applied to a term that is not a ground constructor tree."""


@dataclass
class SynthesisConfig:
    default_test_timeout: float = 1.0
    max_iterations: int = 200
    grid_cap: int = GRID_FALLBACK_CAP


@dataclass
class SynthesisResult:
    status: str  # found | exhausted
    cata: Optional[Catamorphism] = None
    assignment: Optional[ParamAssignment] = None
    iterations: int = 0
    learned: int = 0
    log: List[str] = field(default_factory=list)


# ======================================================================
# Obligation encoding
# ======================================================================

def encode_obligation(
    constraint: Constraint, vars: Dict[str, Sort], system: ChcSystem, degree: int
) -> Constraint:
    """Read a counterexample formula through a degree-N fold: every
    datatype equality becomes component-wise equality of fold images,
    integer conjuncts pass through unchanged."""
    parts: List[Constraint] = []
    for c in conjuncts_of(constraint):
        if isinstance(c, Cmp) and c.op == "=":
            sort = _side_sort(c.left, vars, system) or _side_sort(
                c.right, vars, system
            )
            if sort is not None and not sort.is_int:
                for k in range(degree):
                    parts.append(
                        Cmp(
                            "=",
                            FoldApp(sort.name, k, c.left),
                            FoldApp(sort.name, k, c.right),
                        )
                    )
                continue
        parts.append(c)
    return conj(parts)


def _side_sort(t: Term, vars: Dict[str, Sort], system: ChcSystem) -> Optional[Sort]:
    if isinstance(t, Var):
        return vars.get(t.name, t.sort)
    if isinstance(t, App):
        return system.constructor_sort(t.ctor)
    return None


def test_obligation(
    ob: Counterexample,
    candidate: Catamorphism,
    system: ChcSystem,
    config: BackendConfig,
    timeout: Optional[float],
) -> SmtResult:
    """Ask whether the obligation formula survives the candidate fold.

    unsat means the candidate blocks this derivation for good; sat comes
    with ground values witnessing that it does not.
    """
    encoded = encode_obligation(ob.constraint, ob.vars, system, candidate.degree)
    fold_defs = format_fold_defs(candidate, system)
    return smt_check_sat(
        system,
        dict(ob.vars),
        [encoded],
        config,
        fold_defs=fold_defs,
        timeout=timeout,
    )


# ======================================================================
# Witness generalization
# ======================================================================

def fold_symbolic(
    term: Term, template: TemplateCatamorphism, system: ChcSystem
) -> Tuple[Term, ...]:
    """Apply a parametric fold to a ground constructor term.

    The result is one arithmetic term per component, with the template
    parameters as free variables (products of parameters appear as soon
    as the recursion nests).
    """
    if isinstance(term, IntVal):
        raise NonGroundApplication("fold applied to an integer")
    if not isinstance(term, App):
        raise NonGroundApplication(f"fold applied to non-ground term {term!r}")
    sort = system.constructor_sort(term.ctor)
    dt = system.datatype_of(sort)
    ctor = dt.constructor(term.ctor)
    smap = template.maps[sort.name][term.ctor]
    sub: Dict[str, Term] = {}
    for j, ((_, fsort), arg) in enumerate(zip(ctor.fields, term.args)):
        if fsort.is_int:
            if not isinstance(arg, IntVal):
                raise NonGroundApplication(
                    f"non-constant field {j} in {term.ctor} application"
                )
            sub[field_var(j).name] = arg
        else:
            child = fold_symbolic(arg, template, system)
            for i in range(template.degree):
                sub[child_var(j, i).name] = child[i]
    return tuple(fold_term(subst_term(e, sub)) for e in smap.exprs)


def reduce_ground(
    constraint: Constraint,
    vars: Dict[str, Sort],
    env: Dict[str, object],
    template: TemplateCatamorphism,
    system: ChcSystem,
) -> Constraint:
    """The requirement "this ground point must not satisfy the formula",
    as a constraint on the template parameters.

    Integer conjuncts are decided outright; a datatype equality becomes
    component-wise equality of two parameter polynomials.  The negation
    of the surviving conjunction is returned, so TRUE comes back when
    the ground point already fails an integer conjunct.
    """
    for name in vars:
        if name not in env:
            raise NonGroundApplication(f"witness misses a value for {name!r}")
    parts: List[Constraint] = []
    for c in conjuncts_of(constraint):
        if isinstance(c, Cmp) and c.op == "=":
            sort = _side_sort(c.left, vars, system) or _side_sort(
                c.right, vars, system
            )
            if sort is not None and not sort.is_int:
                l = _ground_term(c.left, env)
                r = _ground_term(c.right, env)
                pl = fold_symbolic(l, template, system)
                pr = fold_symbolic(r, template, system)
                for a, b in zip(pl, pr):
                    parts.append(fold_constraint(Cmp("=", a, b)))
                continue
        holds = eval_constraint(c, {n: env[n] for n in vars})
        if not holds:
            return TRUE
    if not parts:
        # the point satisfies the formula whatever the parameters are;
        # nothing about them can rule it out
        raise NonGroundApplication(
            "ground witness satisfies the formula independently of the fold"
        )
    return Not(conj(parts))


def _ground_term(t: Term, env: Dict[str, object]) -> Term:
    """Substitute witness values, producing a ground constructor term.

    Constructor arguments may be arithmetic (cons(x - 1, l)); anything
    that is not a constructor application or a datatype variable is
    evaluated to an integer under the witness.
    """
    if isinstance(t, App):
        return App(t.ctor, tuple(_ground_term(a, env) for a in t.args), t.sort)
    if isinstance(t, Var) and t.sort.is_adt:
        v = env.get(t.name)
        if not isinstance(v, App):
            raise NonGroundApplication(f"witness misses a tree for {t.name!r}")
        return v
    try:
        return IntVal(eval_term(t, env))
    except (CataliaError, KeyError, TypeError) as exc:
        raise NonGroundApplication(f"cannot ground {t!r}: {exc!r}")


# ======================================================================
# Parameter search
# ======================================================================

def solve_params(
    learned: Sequence[Constraint],
    template: TemplateCatamorphism,
    config: BackendConfig,
    synth: SynthesisConfig,
    log: List[str],
) -> Optional[ParamAssignment]:
    """A parameter assignment satisfying everything learned, or None."""
    consts = {p.name: INT for p in template.params}
    bounds: List[Constraint] = []
    for p in template.params:
        bounds.append(Cmp("<=", IntVal(p.lo), Var(p.name, INT)))
        bounds.append(Cmp("<=", Var(p.name, INT), IntVal(p.hi)))
    empty = ChcSystem()
    res = smt_check_sat(
        empty,
        consts,
        list(bounds) + list(learned),
        config,
        timeout=synth.default_test_timeout * 10,
    )
    if res.is_sat:
        assert res.model is not None
        return {p.name: int(res.model[p.name]) for p in template.params}
    if res.is_unsat:
        return None
    log.append(f"parameter query inconclusive ({res.status}); sweeping the grid")
    if template.grid_size() > synth.grid_cap:
        log.append("parameter grid too large to sweep; giving up on this template")
        return None
    for point in grid_points(template):
        env: Dict[str, object] = dict(point)
        if all(eval_constraint(c, env) for c in learned):
            return point
    return None


def synthesize(
    obligations: Sequence[Counterexample],
    template: TemplateCatamorphism,
    system: ChcSystem,
    config: BackendConfig,
    synth: Optional[SynthesisConfig] = None,
    learned: Optional[List[Constraint]] = None,
) -> SynthesisResult:
    """Propose-and-test loop over the template's parameter space.

    Obligations are tested one at a time, oldest first.  While testing
    the first proposal, the newest obligation gets a second, unbounded
    attempt if its bounded test was inconclusive: that test is the one
    with a guaranteed-findable witness, and giving up early there would
    stall the whole refinement.  Inconclusive tests elsewhere are taken
    as passes and logged; a solver error during the unbounded retry is a
    hard error.

    A caller that synthesizes repeatedly against a growing obligation
    set can pass its own `learned` list; constraints accumulate there in
    place, so later calls resume from everything earlier calls ruled
    out rather than rediscovering it.
    """
    if synth is None:
        synth = SynthesisConfig()
    log: List[str] = []
    if learned is None:
        learned = []
    first_proposal = True
    for iteration in range(1, synth.max_iterations + 1):
        assignment = solve_params(learned, template, config, synth, log)
        if assignment is None:
            log.append(f"parameter space exhausted after {iteration - 1} refinements")
            return SynthesisResult(
                "exhausted", iterations=iteration, learned=len(learned), log=log
            )
        candidate = instantiate(template, assignment)
        refined = False
        for idx, ob in enumerate(obligations):
            newest = idx == len(obligations) - 1
            res = test_obligation(
                ob, candidate, system, config, synth.default_test_timeout
            )
            if res.is_unsat:
                continue
            if not res.is_sat and first_proposal and newest:
                log.append(
                    "bounded test inconclusive on the newest obligation; retrying without a deadline"
                )
                res = test_obligation(ob, candidate, system, config, None)
                if res.status == "error":
                    raise BackendError(
                        f"solver failed during the unbounded obligation test: {res.reason}"
                    )
            if res.is_sat:
                assert res.model is not None
                step = reduce_ground(
                    ob.constraint, ob.vars, res.model, template, system
                )
                if eval_constraint(step, dict(assignment)):
                    raise BackendError(
                        "witness does not exclude the current parameters; "
                        "solver model is unusable"
                    )
                learned.append(step)
                refined = True
                break
            if not res.is_unsat:
                log.append(
                    f"obligation test inconclusive ({res.status}); assuming the candidate passes"
                )
        if not refined:
            log.append(
                f"candidate accepted after {iteration} proposal(s), "
                f"{len(learned)} learned constraint(s)"
            )
            return SynthesisResult(
                "found",
                cata=candidate,
                assignment=assignment,
                iterations=iteration,
                learned=len(learned),
                log=log,
            )
        first_proposal = False
    log.append(f"no candidate within {synth.max_iterations} proposals")
    return SynthesisResult(
        "exhausted", iterations=synth.max_iterations, learned=len(learned), log=log
    )
