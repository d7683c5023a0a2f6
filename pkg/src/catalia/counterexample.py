"""Replay of clause-level refutations against the original system.

A refutation of the abstracted system is only a candidate: the integer
abstraction may admit derivations the datatype system cannot perform.
This module walks the derivation again, step by step, on the original
(preprocessed, still datatype-valued) clauses, collecting the argument
equations and clause constraints the derivation imposes.  The resulting
conjunction is the counterexample formula: satisfiable means the input
system really is unsatisfiable, unsatisfiable means the abstraction was
too coarse and the formula becomes a synthesis obligation.

Admissibility atoms need care.  They exist on both sides, but on the
original side they are tautologies; mirroring their sub-derivations
would only restate, selector by selector, shape information the real
clause steps already impose.  The replay therefore marks them as ghosts:
their resolution steps keep the two derivations aligned position by
position yet contribute no variables and no constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from .abstraction import AbstractionEnv
from .backend import (
    BackendConfig,
    BackendError,
    ProofOutline,
    ProofStep,
    SmtResult,
    smt_check_sat,
)
from .preprocess import ADM_PREFIX
from .terms import (
    App,
    Atom,
    ChcSystem,
    Clause,
    Cmp,
    Constraint,
    Sort,
    TRUE,
    Term,
    Var,
    conj,
    conjuncts_of,
    constraint_vars,
    fold_constraint,
    rename_clause,
    subst_constraint,
    term_vars,
)

_UNSET = object()


@dataclass
class Counterexample:
    """One replayed derivation: its shape and the constraint it imposes."""

    goal: str
    steps: Tuple[ProofStep, ...]
    vars: Dict[str, Sort]
    constraint: Constraint

    def key(self) -> str:
        """A stable fingerprint used to spot repeated counterexamples."""
        from .smtlib import format_constraint

        return format_constraint(self.constraint)


def _clause_by_name(system: ChcSystem, name: str) -> Clause:
    for cl in system.clauses:
        if cl.name == name:
            return cl
    raise BackendError(f"derivation references unknown clause {name!r}")


def _is_ghost_pred(pred: str) -> bool:
    return pred.startswith(ADM_PREFIX)


@dataclass
class _Entry:
    abs_pred: str
    orig_atom: Optional[Atom]  # None for ghosts


def replay_proof(outline: ProofOutline, env: AbstractionEnv) -> Counterexample:
    """Reconstruct the abstract derivation on the original clauses.

    Both systems carry identically named clauses with positionally
    matching bodies, so one aligned atom list suffices.  Raises
    BackendError if the outline does not describe a real derivation of
    the abstract system.
    """
    abstract, original = env.abstract, env.original
    goal_abs = _clause_by_name(abstract, outline.goal)
    goal_orig = _clause_by_name(original, outline.goal)
    if goal_abs.head is not None:
        raise BackendError(f"derivation starts at non-goal clause {outline.goal!r}")
    inst, _ = rename_clause(goal_orig, "!0")
    inst_abs, _ = rename_clause(goal_abs, "!0")
    entries: List[_Entry] = []
    for a_atom, o_atom in zip(inst_abs.body, inst.body):
        ghost = _is_ghost_pred(a_atom.pred)
        entries.append(_Entry(a_atom.pred, None if ghost else o_atom))
    constraints: List[Constraint] = [inst.constraint]
    vars: Dict[str, Sort] = {v.name: v.sort for v in inst.vars}

    for j, step in enumerate(outline.steps, start=1):
        if not entries:
            raise BackendError("derivation continues past an empty goal")
        k = step.atom
        if not (0 <= k < len(entries)):
            raise BackendError(f"step {j} resolves out-of-range atom {k}")
        entry = entries[k]
        clause_abs = _clause_by_name(abstract, step.clause)
        clause_orig = _clause_by_name(original, step.clause)
        if clause_abs.head is None:
            raise BackendError(f"step {j} resolves with goal clause {step.clause!r}")
        if clause_abs.head.pred != entry.abs_pred:
            raise BackendError(
                f"step {j} resolves a {entry.abs_pred} atom with a "
                f"{clause_abs.head.pred} clause"
            )
        suffix = f"!{j}"
        inst_abs, _ = rename_clause(clause_abs, suffix)
        ghost = entry.orig_atom is None
        new_entries: List[_Entry] = []
        if ghost:
            for a_atom in inst_abs.body:
                new_entries.append(_Entry(a_atom.pred, None))
        else:
            inst_orig, _ = rename_clause(clause_orig, suffix)
            assert inst_orig.head is not None
            for v in inst_orig.vars:
                vars[v.name] = v.sort
            constraints.append(inst_orig.constraint)
            for ha, ga in zip(inst_orig.head.args, entry.orig_atom.args):
                constraints.append(Cmp("=", ha, ga))
            for a_atom, o_atom in zip(inst_abs.body, inst_orig.body):
                child_ghost = _is_ghost_pred(a_atom.pred)
                new_entries.append(
                    _Entry(a_atom.pred, None if child_ghost else o_atom)
                )
        entries = entries[:k] + new_entries + entries[k + 1 :]
    if entries:
        raise BackendError(
            f"derivation ends with {len(entries)} unresolved atom(s)"
        )
    constraint = conj([c for c in constraints if c != TRUE])
    used = {v.name for v in constraint_vars(constraint)}
    vars = {n: s for n, s in vars.items() if n in used}
    return Counterexample(outline.goal, outline.steps, vars, constraint)


# ======================================================================
# Simplification
# ======================================================================

def _is_adt_term(t: Term) -> bool:
    if isinstance(t, App):
        return True
    return isinstance(t, Var) and t.sort.is_adt


def _fold_conjunct(c: Constraint) -> List[Constraint]:
    """Fold one conjunct.  Datatype equalities stay whole: splitting
    cons(a, l) = cons(b, l') into field equations would be a sound step
    on its own, but the formula later becomes a synthesis obligation,
    and a fold can merge field values that the split form would force
    apart.  The only reduction applied to them is dropping t = t."""
    if isinstance(c, Cmp) and c.op == "=":
        if _is_adt_term(c.left) or _is_adt_term(c.right):
            if c.left == c.right:
                return []
            return [c]
    folded = fold_constraint(c)
    if folded == TRUE:
        return []
    return [folded]


def simplify(cex: Counterexample) -> Counterexample:
    """Equality propagation plus constant folding, to a fixed point.

    Equations binding a variable to a term it does not occur in are
    substituted out and ground arithmetic folds.  Datatype equalities
    between constructor terms are deliberately left in place, clashes
    included: they are what an infeasible derivation looks like, and
    they carry the shape information the refinement step feeds on.
    """
    parts = list(conjuncts_of(cex.constraint))
    changed = True
    while changed:
        changed = False
        expanded: List[Constraint] = []
        for p in parts:
            expanded.extend(_fold_conjunct(p))
        parts = expanded
        for i, p in enumerate(parts):
            if not (isinstance(p, Cmp) and p.op == "="):
                continue
            binding: Optional[Tuple[str, Term]] = None
            if isinstance(p.left, Var) and p.left.name not in {
                v.name for v in term_vars(p.right)
            }:
                binding = (p.left.name, p.right)
            elif isinstance(p.right, Var) and p.right.name not in {
                v.name for v in term_vars(p.left)
            }:
                binding = (p.right.name, p.left)
            if binding is None:
                continue
            name, term = binding
            rest = parts[:i] + parts[i + 1 :]
            parts = [subst_constraint(c, {name: term}) for c in rest]
            changed = True
            break
    constraint = conj(parts) if parts else TRUE
    used = {v.name for v in constraint_vars(constraint)}
    vars = {n: s for n, s in cex.vars.items() if n in used}
    return replace(cex, vars=vars, constraint=constraint)


# ======================================================================
# Feasibility
# ======================================================================

def feasibility(
    cex: Counterexample,
    system: ChcSystem,
    config: BackendConfig,
    timeout: object = _UNSET,
) -> SmtResult:
    """Is the counterexample formula satisfiable over the datatypes?

    Satisfiable: the derivation is genuine and the input system is
    unsatisfiable.  Unsatisfiable: the derivation was an artifact of the
    abstraction and its formula becomes a synthesis obligation.
    """
    consts = {name: sort for name, sort in cex.vars.items()}
    kwargs = {}
    if timeout is not _UNSET:
        kwargs["timeout"] = timeout
    return smt_check_sat(
        system, consts, [cex.constraint], config, **kwargs
    )
