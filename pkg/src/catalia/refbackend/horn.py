"""Decision engine for integer Horn clause scripts.

Two half-procedures share the work:

* a conjunctive invariant generator: sample reachable predicate states by
  randomized forward derivation, build a pool of candidate linear atoms per
  predicate, prune the pool against the samples, then run the classic
  "drop everything the clauses refute" fixpoint until the remainder is
  inductive.  If the goal clauses are blocked by the remainder the system
  is satisfiable and the remainder is the model.

* a breadth-first SLD search for a refutation: resolve the leftmost goal
  atom with each clause in program order, carry the path constraint as a
  linear arithmetic formula, prune unsatisfiable paths eagerly.  A path
  with no atoms left is a genuine refutation because pruning kept its
  constraint satisfiable.

Both halves are deterministic: the sampler uses a fixed seed and every
iteration order is the program order.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from . import lia
from .lia import Lin, LiaBudgetError
from .rterm import (
    BackendInputError,
    NonlinearTerm,
    Tables,
    eval_formula,
    eval_term,
    read_formula,
    read_term,
    strip,
    to_lia,
    to_lin,
)

Atom = Tuple[str, tuple]  # (pred, arg terms)


@dataclass
class HornClause:
    name: str
    vars: Tuple[str, ...]
    constraint: tuple
    body: Tuple[Atom, ...]
    head: Optional[Atom]  # None marks a goal clause


# Candidate invariant atoms: ('lin', coeffs, rel, d) over the argument
# positions, or ('false',) for predicates never reached by any derivation.
Cand = tuple

SAMPLE_SEED = 0xCA7A11A
SAMPLE_ROUNDS = 40
SAMPLE_ATTEMPTS = 4
MAX_TUPLES_PER_PRED = 600
MAX_POOL_PER_PRED = 160
MAX_VECTORS = 1200
CONST_RANGE = range(-2, 3)

BFS_MAX_DEPTH = 14
BFS_MAX_STATES = 30000


def clause_from_assert(e, tables: Tables, name: str) -> HornClause:
    """Translate one asserted formula into a clause."""
    vars: List[str] = []
    scope: Dict[str, str] = {}
    if isinstance(e, list) and e and e[0] == "forall":
        for b in e[1]:
            v = strip(b[0])
            vars.append(v)
            scope[v] = strip(b[1]) if isinstance(b[1], str) else "?"
        e = e[2]
    body_part = None
    head_part = e
    while isinstance(head_part, list) and head_part and head_part[0] == "=>":
        if len(head_part) != 3:
            raise BackendInputError("implication arity")
        inner = head_part[1]
        body_part = inner if body_part is None else ["and", body_part, inner]
        head_part = head_part[2]

    def is_atom(x) -> bool:
        if isinstance(x, str):
            return strip(x) in tables.preds
        return bool(x) and isinstance(x[0], str) and strip(x[0]) in tables.preds

    def to_atom(x) -> Atom:
        if isinstance(x, str):
            return (strip(x), ())
        return (
            strip(x[0]),
            tuple(read_term(a, scope, tables) for a in x[1:]),
        )

    constraint_parts: List[tuple] = []
    atoms: List[Atom] = []
    def walk(x) -> None:
        if isinstance(x, list) and x and x[0] == "and":
            for y in x[1:]:
                walk(y)
        elif is_atom(x):
            atoms.append(to_atom(x))
        else:
            constraint_parts.append(read_formula(x, scope, tables))

    if body_part is not None:
        walk(body_part)
    constraint = ("and",) + tuple(constraint_parts) if constraint_parts else ("true",)
    if len(constraint_parts) == 1:
        constraint = constraint_parts[0]
    head: Optional[Atom]
    if isinstance(head_part, str) and strip(head_part) == "false":
        head = None
    elif is_atom(head_part):
        head = to_atom(head_part)
    else:
        raise BackendInputError(f"clause head is neither an atom nor false: {head_part!r}")
    return HornClause(name, tuple(vars), constraint, tuple(atoms), head)


# ======================================================================
# Forward sampling
# ======================================================================

def _equalities(constraint: tuple) -> List[Tuple[tuple, tuple]]:
    out = []
    if constraint[0] == "=":
        out.append((constraint[1], constraint[2]))
    elif constraint[0] == "and":
        for p in constraint[1:]:
            out.extend(_equalities(p))
    return out


def _free_vars(t: tuple, acc: set) -> None:
    if t[0] == "var":
        acc.add(t[1])
    else:
        for a in t[1:]:
            if isinstance(a, tuple):
                _free_vars(a, acc)


def _solve_unit(lin: Lin, env: Dict[str, int]) -> Optional[Tuple[str, int]]:
    """If lin == 0 constrains exactly one unbound unit-coefficient var, solve it."""
    residue = lin.const
    target = None
    for v, c in lin.coeffs:
        if v in env:
            residue += c * env[v]
        elif target is None:
            target = (v, c)
        else:
            return None
    if target is None:
        return None
    v, c = target
    if c not in (1, -1) or residue % c != 0:
        if abs(c) != 1:
            return None
    return (v, -residue // c)


class _Sampler:
    def __init__(self, clauses: Sequence[HornClause], tables: Tables):
        self.clauses = [c for c in clauses if c.head is not None]
        self.tables = tables
        self.rng = random.Random(SAMPLE_SEED)
        self.derived: Dict[str, List[Tuple[int, ...]]] = {p: [] for p in tables.preds}
        self.seen: Dict[str, set] = {p: set() for p in tables.preds}
        self.value_pool: List[int] = list(range(-4, 5))

    def run(self) -> Dict[str, List[Tuple[int, ...]]]:
        for _ in range(SAMPLE_ROUNDS):
            progress = False
            for cl in self.clauses:
                for _ in range(SAMPLE_ATTEMPTS):
                    if self._try_clause(cl):
                        progress = True
            if not progress and all(self.derived[p] for p in self.derived):
                break
        return self.derived

    def _try_clause(self, cl: HornClause) -> bool:
        assert cl.head is not None
        if len(self.derived[cl.head[0]]) >= MAX_TUPLES_PER_PRED:
            return False
        env: Dict[str, int] = {}
        equations: List[Tuple[tuple, int]] = []
        for pred, args in cl.body:
            pool = self.derived[pred]
            if not pool:
                return False
            tup = self.rng.choice(pool)
            for arg, val in zip(args, tup):
                equations.append((arg, val))
        lin_eqs: List[Lin] = []
        for term, val in equations:
            try:
                lin_eqs.append(to_lin(term).sub(Lin.const_of(val)))
            except NonlinearTerm:
                return False
        for a, b in _equalities(cl.constraint):
            try:
                lin_eqs.append(to_lin(a).sub(to_lin(b)))
            except NonlinearTerm:
                pass
        changed = True
        while changed:
            changed = False
            for lin in lin_eqs:
                hit = _solve_unit(lin, env)
                if hit is not None and hit[0] not in env:
                    env[hit[0]] = hit[1]
                    changed = True
        for v in cl.vars:
            if v not in env:
                env[v] = self.rng.choice(self.value_pool)
        try:
            if not eval_formula(cl.constraint, env, self.tables):
                return False
            for term, val in equations:
                if eval_term(term, env, self.tables) != val:
                    return False
            head_tuple = tuple(
                int(eval_term(a, env, self.tables)) for a in cl.head[1]
            )
        except (BackendInputError, KeyError):
            return False
        if head_tuple in self.seen[cl.head[0]]:
            return False
        self.seen[cl.head[0]].add(head_tuple)
        self.derived[cl.head[0]].append(head_tuple)
        for x in head_tuple:
            if x not in self.value_pool and len(self.value_pool) < 64:
                self.value_pool.append(x)
        return True


# ======================================================================
# Candidate pools and the inductive fixpoint
# ======================================================================

def _vectors(arity: int) -> List[Tuple[int, ...]]:
    if arity == 0:
        return []
    out: List[Tuple[int, ...]] = []
    max_nonzero = 3 if arity <= 9 else 2
    for nz in range(1, min(arity, max_nonzero) + 1):
        for positions in itertools.combinations(range(arity), nz):
            for signs in itertools.product((1, -1), repeat=nz):
                vec = [0] * arity
                for p, s in zip(positions, signs):
                    vec[p] = s
                out.append(tuple(vec))
                if len(out) >= MAX_VECTORS:
                    return out
    return out


def _pool_for(arity: int, samples: List[Tuple[int, ...]]) -> List[Cand]:
    pool: List[Cand] = []
    if not samples:
        pool.append(("false",))
    for vec in _vectors(arity):
        if samples:
            dots = [sum(c * x for c, x in zip(vec, s)) for s in samples]
            lo, hi = min(dots), max(dots)
            if lo == hi and lo in CONST_RANGE:
                pool.append(("lin", vec, "=", lo))
            for d in CONST_RANGE:
                if hi <= d:
                    pool.append(("lin", vec, "<=", d))
                    break
            hit = set(dots)
            for d in CONST_RANGE:
                if d not in hit:
                    pool.append(("lin", vec, "!=", d))
        else:
            pool.append(("lin", vec, "=", 0))
            pool.append(("lin", vec, "<=", 0))
        if len(pool) >= MAX_POOL_PER_PRED:
            break
    return pool


def _cand_formula(cand: Cand, args: Sequence[Lin]) -> lia.Formula:
    if cand[0] == "false":
        return lia.F
    _, vec, rel, d = cand
    acc = Lin.const_of(-d)
    for c, arg in zip(vec, args):
        if c:
            acc = acc.add(arg.scale(c))
    if rel == "=":
        return lia.eq0(acc)
    if rel == "<=":
        return lia.le0(acc)
    return lia.ne0(acc)


def _cand_sexp(cand: Cand, params: Sequence[str]) -> str:
    if cand[0] == "false":
        return "false"
    _, vec, rel, d = cand
    parts = []
    for c, p in zip(vec, params):
        if c == 1:
            parts.append(p)
        elif c == -1:
            parts.append(f"(* (- 1) {p})")
        elif c:
            parts.append(f"(* {c} {p})")
    lhs = parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"
    rhs = str(d) if d >= 0 else f"(- {-d})"
    if rel == "=":
        return f"(= {lhs} {rhs})"
    if rel == "<=":
        return f"(<= {lhs} {rhs})"
    return f"(distinct {lhs} {rhs})"


class HornEngine:
    def __init__(self, clauses: Sequence[HornClause], tables: Tables):
        self.clauses = list(clauses)
        self.tables = tables
        self.preds = dict(tables.preds)
        self._lin_cache: Dict[int, Optional[Tuple[lia.Formula, List[List[Lin]], Optional[List[Lin]]]]] = {}

    # -- clause translation ------------------------------------------

    def _clause_lin(self, idx: int):
        """Constraint formula plus argument expressions, or None if nonlinear."""
        if idx in self._lin_cache:
            return self._lin_cache[idx]
        cl = self.clauses[idx]
        try:
            constraint = to_lia(cl.constraint)
            body_args = [[to_lin(a) for a in args] for _, args in cl.body]
            head_args = (
                [to_lin(a) for a in cl.head[1]] if cl.head is not None else None
            )
            out = (constraint, body_args, head_args)
        except (NonlinearTerm, BackendInputError):
            out = None
        self._lin_cache[idx] = out
        return out

    # -- invariant inference -----------------------------------------

    def _houdini(self, samples: Dict[str, List[Tuple[int, ...]]]):
        alive: Dict[str, List[Cand]] = {}
        for pred, sorts in self.preds.items():
            alive[pred] = _pool_for(len(sorts), samples.get(pred, []))
        defn_clauses = [
            i for i, cl in enumerate(self.clauses) if cl.head is not None
        ]
        pending = list(defn_clauses)
        # Per-clause counterexample points found so far.  A point that
        # witnessed one failed candidate usually kills many of its pool
        # mates, and it stays valid as the premise only ever weakens.
        cex: Dict[int, List[Dict[str, int]]] = {i: [] for i in defn_clauses}
        guard = 0
        while pending:
            guard += 1
            if guard > 2000:
                return None
            idx = pending.pop(0)
            cl = self.clauses[idx]
            lin = self._clause_lin(idx)
            if lin is None:
                return None
            constraint, body_args, head_args = lin
            assert cl.head is not None and head_args is not None
            premise = [constraint]
            for (pred, _), args in zip(cl.body, body_args):
                for cand in alive[pred]:
                    premise.append(_cand_formula(cand, args))
            premise_f = lia.conj(premise)
            kept = []
            dropped = False
            for cand in alive[cl.head[0]]:
                neg = lia.negate(_cand_formula(cand, head_args))
                if any(lia.eval_formula(neg, env) for env in cex[idx]):
                    dropped = True
                    continue
                bad = lia.conj([premise_f, neg])
                try:
                    sat = lia.satisfiable(bad)
                    if sat and len(cex[idx]) < 40:
                        env = lia.witness(bad)
                        if env is not None:
                            cex[idx].append(env)
                except LiaBudgetError:
                    sat = True
                if sat:
                    dropped = True
                else:
                    kept.append(cand)
            if dropped:
                alive[cl.head[0]] = kept
                for j in defn_clauses:
                    if j not in pending and any(
                        p == cl.head[0] for p, _ in self.clauses[j].body
                    ):
                        pending.append(j)
        return alive

    def _goals_blocked(self, alive: Dict[str, List[Cand]]) -> bool:
        for idx, cl in enumerate(self.clauses):
            if cl.head is not None:
                continue
            lin = self._clause_lin(idx)
            if lin is None:
                return False
            constraint, body_args, _ = lin
            premise = [constraint]
            for (pred, _), args in zip(cl.body, body_args):
                for cand in alive[pred]:
                    premise.append(_cand_formula(cand, args))
            try:
                if lia.satisfiable(lia.conj(premise)):
                    return False
            except LiaBudgetError:
                return False
        return True

    def _minimize(self, alive: Dict[str, List[Cand]]) -> Dict[str, List[Cand]]:
        out: Dict[str, List[Cand]] = {}
        for pred, cands in alive.items():
            if any(c[0] == "false" for c in cands):
                out[pred] = [("false",)]
                continue
            params = [Lin.var(f"a!{i}") for i in range(len(self.preds[pred]))]
            keep = list(cands)
            envs: List[Dict[str, int]] = []
            for cand in list(keep):
                rest = [c for c in keep if c is not cand]
                body = lia.conj(
                    [_cand_formula(c, params) for c in rest]
                    + [lia.negate(_cand_formula(cand, params))]
                )
                if any(lia.eval_formula(body, env) for env in envs):
                    continue
                try:
                    if lia.satisfiable(body):
                        env = lia.witness(body)
                        if env is not None and len(envs) < 40:
                            envs.append(env)
                    else:
                        keep = rest
                except LiaBudgetError:
                    pass
            out[pred] = keep
        return out

    def format_model(self, alive: Dict[str, List[Cand]]) -> str:
        lines = ["(model"]
        for pred, sorts in self.preds.items():
            params = [f"a!{i}" for i in range(len(sorts))]
            binder = " ".join(f"({p} Int)" for p in params)
            cands = alive[pred]
            if not cands:
                body = "true"
            elif len(cands) == 1:
                body = _cand_sexp(cands[0], params)
            else:
                body = "(and " + " ".join(_cand_sexp(c, params) for c in cands) + ")"
            lines.append(f"  (define-fun {pred} ({binder}) Bool {body})")
        lines.append(")")
        return "\n".join(lines)

    # -- refutation search -------------------------------------------

    def _rename_lin(self, lin: Lin, suffix: str) -> Lin:
        return Lin(
            tuple(sorted((f"{v}{suffix}", c) for v, c in lin.coeffs)), lin.const
        )

    def _rename_formula(self, f: lia.Formula, suffix: str) -> lia.Formula:
        tag = f[0]
        if tag in ("t", "f"):
            return f
        if tag in ("and", "or"):
            return (tag,) + tuple(self._rename_formula(p, suffix) for p in f[1:])
        if tag in ("le", "eq", "ne"):
            return (tag, self._rename_lin(f[1], suffix))
        if tag in ("dvd", "ndvd"):
            return (tag, f[1], self._rename_lin(f[2], suffix))
        raise AssertionError(f)

    def refute(self):
        """Breadth-first search for a derivation of false.

        Returns a list of (kind, clause name) steps or None.
        """
        frontier = []
        for idx, cl in enumerate(self.clauses):
            if cl.head is not None:
                continue
            lin = self._clause_lin(idx)
            if lin is None:
                continue
            constraint, body_args, _ = lin
            suffix = "!0"
            renamed = self._rename_formula(constraint, suffix)
            atoms = tuple(
                (pred, tuple(self._rename_lin(a, suffix) for a in args))
                for (pred, _), args in zip(cl.body, body_args)
            )
            try:
                if not lia.satisfiable(renamed):
                    continue
            except LiaBudgetError:
                continue
            frontier.append((atoms, renamed, (("goal", cl.name),)))
        by_head: Dict[str, List[int]] = {}
        for idx, cl in enumerate(self.clauses):
            if cl.head is not None:
                by_head.setdefault(cl.head[0], []).append(idx)
        explored = 0
        while frontier:
            next_frontier = []
            for atoms, constraint, steps in frontier:
                if not atoms:
                    return list(steps)
                if len(steps) > BFS_MAX_DEPTH:
                    continue
                pred, goal_args = atoms[0]
                for idx in by_head.get(pred, []):
                    cl = self.clauses[idx]
                    lin = self._clause_lin(idx)
                    if lin is None:
                        continue
                    cl_constraint, cl_body_args, cl_head_args = lin
                    assert cl_head_args is not None
                    suffix = f"!{len(steps)}"
                    conj_parts = [
                        constraint,
                        self._rename_formula(cl_constraint, suffix),
                    ]
                    for ha, ga in zip(cl_head_args, goal_args):
                        conj_parts.append(
                            lia.eq0(self._rename_lin(ha, suffix).sub(ga))
                        )
                    new_constraint = lia.conj(conj_parts)
                    try:
                        if not lia.satisfiable(new_constraint):
                            continue
                    except LiaBudgetError:
                        continue
                    new_atoms = tuple(
                        (bp, tuple(self._rename_lin(a, suffix) for a in args))
                        for (bp, _), args in zip(cl.body, cl_body_args)
                    ) + atoms[1:]
                    explored += 1
                    if explored > BFS_MAX_STATES:
                        return None
                    next_frontier.append(
                        (new_atoms, new_constraint, steps + (("step", cl.name),))
                    )
            frontier = next_frontier
        return None

    def format_proof(self, steps) -> str:
        parts = []
        for kind, name in steps:
            if kind == "goal":
                parts.append(f"(goal {name})")
            else:
                parts.append(f"(step (clause {name}) (atom 0))")
        return "(proof (sld " + " ".join(parts) + "))"

    # -- top level ----------------------------------------------------

    def check(self):
        """Returns ('sat', model text), ('unsat', proof text) or ('unknown', why)."""
        samples = _Sampler(self.clauses, self.tables).run()
        alive = self._houdini(samples)
        if alive is not None and self._goals_blocked(alive):
            alive = self._minimize(alive)
            return ("sat", self.format_model(alive))
        steps = self.refute()
        if steps is not None:
            return ("unsat", self.format_proof(steps))
        return ("unknown", "no inductive invariant found and no refutation within bounds")
