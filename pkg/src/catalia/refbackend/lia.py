"""Exact linear integer arithmetic: satisfiability and witnesses.

Formulas are nested tuples over linear expressions:

    ('t',) | ('f',)
    ('and', f1, ...) | ('or', f1, ...)
    ('le', e)        e <= 0
    ('eq', e)        e  = 0
    ('ne', e)        e != 0
    ('dvd', d, e)    d divides e      (d >= 2)
    ('ndvd', d, e)   d does not divide e

Negation is not a node: atom negations are computed structurally, so
every formula is already in negation normal form.

Satisfiability is decided by Cooper's quantifier elimination over the
existential closure, preceded by cheap equality substitution and formula
simplification; witnesses come from a growing box search, which must
terminate once satisfiability is established.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class LiaBudgetError(Exception):
    """Formula growth exceeded the safety budget; callers degrade to unknown."""


# ======================================================================
# Linear expressions
# ======================================================================

@dataclass(frozen=True)
class Lin:
    """A linear expression  sum(c_i * v_i) + const  with c_i != 0."""

    coeffs: Tuple[Tuple[str, int], ...]
    const: int

    @staticmethod
    def of(coeffs: Dict[str, int], const: int) -> "Lin":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return Lin(items, const)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "Lin":
        return Lin.of({name: coeff}, 0)

    @staticmethod
    def const_of(k: int) -> "Lin":
        return Lin((), k)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    def vars(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs

    def add(self, other: "Lin") -> "Lin":
        acc = dict(self.coeffs)
        for v, c in other.coeffs:
            acc[v] = acc.get(v, 0) + c
        return Lin.of(acc, self.const + other.const)

    def scale(self, k: int) -> "Lin":
        if k == 0:
            return Lin((), 0)
        return Lin.of({v: c * k for v, c in self.coeffs}, self.const * k)

    def sub(self, other: "Lin") -> "Lin":
        return self.add(other.scale(-1))

    def drop(self, var: str) -> "Lin":
        return Lin.of({v: c for v, c in self.coeffs if v != var}, self.const)

    def subst(self, var: str, repl: "Lin") -> "Lin":
        c = self.coeff(var)
        if c == 0:
            return self
        return self.drop(var).add(repl.scale(c))

    def eval(self, env: Dict[str, int]) -> int:
        return self.const + sum(c * env.get(v, 0) for v, c in self.coeffs)


Formula = tuple

T: Formula = ("t",)
F: Formula = ("f",)


def conj(parts: Iterable[Formula]) -> Formula:
    flat: List[Formula] = []
    for p in parts:
        if p == F:
            return F
        if p == T:
            continue
        if p[0] == "and":
            flat.extend(p[1:])
        else:
            flat.append(p)
    seen = []
    for p in flat:
        if p not in seen:
            seen.append(p)
    if not seen:
        return T
    if len(seen) == 1:
        return seen[0]
    return ("and", *seen)


def disj(parts: Iterable[Formula]) -> Formula:
    flat: List[Formula] = []
    for p in parts:
        if p == T:
            return T
        if p == F:
            continue
        if p[0] == "or":
            flat.extend(p[1:])
        else:
            flat.append(p)
    seen = []
    for p in flat:
        if p not in seen:
            seen.append(p)
    if not seen:
        return F
    if len(seen) == 1:
        return seen[0]
    return ("or", *seen)


def le0(e: Lin) -> Formula:
    if e.is_const():
        return T if e.const <= 0 else F
    return ("le", e)


def eq0(e: Lin) -> Formula:
    if e.is_const():
        return T if e.const == 0 else F
    return ("eq", e)


def ne0(e: Lin) -> Formula:
    if e.is_const():
        return T if e.const != 0 else F
    return ("ne", e)


def negate(f: Formula) -> Formula:
    tag = f[0]
    if tag == "t":
        return F
    if tag == "f":
        return T
    if tag == "and":
        return disj(negate(p) for p in f[1:])
    if tag == "or":
        return conj(negate(p) for p in f[1:])
    if tag == "le":
        # not(e <= 0)  <=>  e >= 1  <=>  1 - e <= 0
        return le0(Lin.const_of(1).sub(f[1]))
    if tag == "eq":
        return ne0(f[1])
    if tag == "ne":
        return eq0(f[1])
    if tag == "dvd":
        return ("ndvd", f[1], f[2])
    if tag == "ndvd":
        return ("dvd", f[1], f[2])
    raise ValueError(f"unknown formula tag {tag!r}")


def formula_vars(f: Formula) -> Tuple[str, ...]:
    out: List[str] = []

    def walk(g: Formula) -> None:
        tag = g[0]
        if tag in ("and", "or"):
            for p in g[1:]:
                walk(p)
        elif tag in ("le", "eq", "ne"):
            for v in g[1].vars():
                if v not in out:
                    out.append(v)
        elif tag in ("dvd", "ndvd"):
            for v in g[2].vars():
                if v not in out:
                    out.append(v)

    walk(f)
    return tuple(out)


def subst_formula(f: Formula, var: str, repl: Lin) -> Formula:
    tag = f[0]
    if tag in ("t", "f"):
        return f
    if tag == "and":
        return conj(subst_formula(p, var, repl) for p in f[1:])
    if tag == "or":
        return disj(subst_formula(p, var, repl) for p in f[1:])
    if tag == "le":
        return le0(f[1].subst(var, repl))
    if tag == "eq":
        return eq0(f[1].subst(var, repl))
    if tag == "ne":
        return ne0(f[1].subst(var, repl))
    if tag in ("dvd", "ndvd"):
        e = f[2].subst(var, repl)
        if e.is_const():
            hit = e.const % f[1] == 0
            return (T if hit else F) if tag == "dvd" else (F if hit else T)
        return (tag, f[1], e)
    raise ValueError(f"unknown formula tag {tag!r}")


def eval_formula(f: Formula, env: Dict[str, int]) -> bool:
    tag = f[0]
    if tag == "t":
        return True
    if tag == "f":
        return False
    if tag == "and":
        return all(eval_formula(p, env) for p in f[1:])
    if tag == "or":
        return any(eval_formula(p, env) for p in f[1:])
    if tag == "le":
        return f[1].eval(env) <= 0
    if tag == "eq":
        return f[1].eval(env) == 0
    if tag == "ne":
        return f[1].eval(env) != 0
    if tag == "dvd":
        return f[2].eval(env) % f[1] == 0
    if tag == "ndvd":
        return f[2].eval(env) % f[1] != 0
    raise ValueError(f"unknown formula tag {tag!r}")


# ======================================================================
# Equality substitution (cheap dimension reduction for conjunctions)
# ======================================================================

def propagate_equalities(f: Formula) -> Formula:
    """In a top-level conjunction, repeatedly solve unit-coefficient
    equalities and substitute them through the rest."""
    if f[0] != "and":
        return f
    parts = list(f[1:])
    changed = True
    while changed:
        changed = False
        for i, p in enumerate(parts):
            if p[0] != "eq":
                continue
            e: Lin = p[1]
            target = None
            for v, c in e.coeffs:
                if c in (1, -1):
                    target = (v, c)
                    break
            if target is None:
                continue
            v, c = target
            # c*v + rest = 0  =>  v = -rest/c (c is +-1)
            repl = e.drop(v).scale(-1 if c == 1 else 1)
            rest = [subst_formula(q, v, repl) for j, q in enumerate(parts) if j != i]
            parts = rest
            changed = True
            break
    out = conj(parts)
    return out


# ======================================================================
# Cooper's elimination
# ======================================================================

_SIZE_BUDGET = 200_000


def _formula_size(f: Formula) -> int:
    tag = f[0]
    if tag in ("and", "or"):
        return 1 + sum(_formula_size(p) for p in f[1:])
    return 1


def eliminate_var(f: Formula, x: str) -> Formula:
    """Compute a formula equivalent to  exists x. f,  without x."""
    coeffs = _coeffs_of(f, x)
    if not coeffs:
        return f
    m = _lcm_list([abs(c) for c in coeffs])
    scaled = _scale_var(f, x, m)
    if m > 1:
        scaled = conj([scaled, ("dvd", m, Lin.var(x))])
    # Now every occurrence of x has coefficient +-1.
    divisors = [g[1] for g in _atoms(scaled) if g[0] in ("dvd", "ndvd")
                and g[2].coeff(x) != 0]
    d = _lcm_list([1] + divisors)
    bset = _b_set(scaled, x)
    cases: List[Formula] = []
    minus_inf = _minus_infinity(scaled, x)
    for j in range(1, d + 1):
        cases.append(subst_formula(minus_inf, x, Lin.const_of(j)))
        for b in bset:
            cases.append(subst_formula(scaled, x, b.add(Lin.const_of(j))))
    out = disj(cases)
    if _formula_size(out) > _SIZE_BUDGET:
        raise LiaBudgetError(f"eliminating {x} produced {_formula_size(out)} nodes")
    return out


def _atoms(f: Formula):
    tag = f[0]
    if tag in ("and", "or"):
        for p in f[1:]:
            yield from _atoms(p)
    elif tag not in ("t", "f"):
        yield f


def _coeffs_of(f: Formula, x: str) -> List[int]:
    out = []
    for a in _atoms(f):
        e = a[1] if a[0] in ("le", "eq", "ne") else a[2]
        c = e.coeff(x)
        if c != 0:
            out.append(c)
    return out


def _lcm_list(xs: Sequence[int]) -> int:
    out = 1
    for v in xs:
        out = out * v // math.gcd(out, v)
    return out


def _scale_var(f: Formula, x: str, m: int) -> Formula:
    """Multiply atoms through so x's coefficient is +-1 (renaming m*x to x)."""
    tag = f[0]
    if tag in ("t", "f"):
        return f
    if tag == "and":
        return conj(_scale_var(p, x, m) for p in f[1:])
    if tag == "or":
        return disj(_scale_var(p, x, m) for p in f[1:])
    if tag in ("le", "eq", "ne"):
        e: Lin = f[1]
        c = e.coeff(x)
        if c == 0:
            return f
        k = m // abs(c)
        scaled = e.scale(k)
        # coefficient of x is now +-m; rename m*x -> x
        sign = 1 if c > 0 else -1
        e2 = scaled.drop(x).add(Lin.var(x, sign))
        return (tag, e2)
    if tag in ("dvd", "ndvd"):
        e = f[2]
        c = e.coeff(x)
        if c == 0:
            return f
        k = m // abs(c)
        scaled = e.scale(k)
        sign = 1 if c > 0 else -1
        e2 = scaled.drop(x).add(Lin.var(x, sign))
        return (tag, f[1] * k, e2)
    raise ValueError(f"unknown formula tag {tag!r}")


def _b_set(f: Formula, x: str) -> List[Lin]:
    """Lower-bound substitution candidates for Cooper's right disjunct."""
    out: List[Lin] = []

    def push(e: Lin) -> None:
        if e not in out:
            out.append(e)

    for a in _atoms(f):
        if a[0] == "le":
            e: Lin = a[1]
            c = e.coeff(x)
            if c == -1:
                # -x + r <= 0  =>  x >= r : lower bound r - 1
                push(e.drop(x).add(Lin.const_of(-1)))
        elif a[0] == "eq":
            e = a[1]
            c = e.coeff(x)
            if c != 0:
                # x = -c*rest ; lower bound value - 1
                val = e.drop(x).scale(-c)
                push(val.add(Lin.const_of(-1)))
        elif a[0] == "ne":
            e = a[1]
            c = e.coeff(x)
            if c != 0:
                push(e.drop(x).scale(-c))
    return out


def _minus_infinity(f: Formula, x: str) -> Formula:
    """f with x pushed to minus infinity: inequalities decide, divisibility
    atoms keep x (substituted with the residue later)."""
    tag = f[0]
    if tag in ("t", "f", "dvd", "ndvd"):
        return f
    if tag == "and":
        return conj(_minus_infinity(p, x) for p in f[1:])
    if tag == "or":
        return disj(_minus_infinity(p, x) for p in f[1:])
    if tag == "le":
        c = f[1].coeff(x)
        if c == 0:
            return f
        # x -> -inf:  +x + r <= 0 true;  -x + r <= 0 false
        return T if c > 0 else F
    if tag == "eq":
        return f if f[1].coeff(x) == 0 else F
    if tag == "ne":
        return f if f[1].coeff(x) == 0 else T
    raise ValueError(f"unknown formula tag {tag!r}")


# ======================================================================
# Decision and witnesses
# ======================================================================

@lru_cache(maxsize=65536)
def _decide(f: Formula) -> bool:
    if f == T:
        return True
    if f == F:
        return False
    g = propagate_equalities(f)
    if g[0] == "or":
        return any(_decide(p) for p in g[1:])
    if g[0] == "and":
        # Case-split on an embedded disjunction before any elimination;
        # quantifier elimination then only ever sees plain conjunctions,
        # which keeps the substitution blowup local to one branch.
        for i, p in enumerate(g[1:]):
            if p[0] == "or":
                rest = g[1 : 1 + i] + g[2 + i :]
                return any(_decide(conj(rest + (q,))) for q in p[1:])
    vs = formula_vars(g)
    if not vs:
        return eval_formula(g, {})
    # Eliminate the least-occurring variable first; it keeps blowup down.
    counts = {v: 0 for v in vs}
    for a in _atoms(g):
        e = a[1] if a[0] in ("le", "eq", "ne") else a[2]
        for v, _ in e.coeffs:
            counts[v] += 1
    x = min(vs, key=lambda v: (counts[v], v))
    return _decide(eliminate_var(g, x))


def satisfiable(f: Formula) -> bool:
    """Exact satisfiability over the integers."""
    quick = _quick_witness(f)
    if quick is not None:
        return True
    return _decide(f)


def _quick_witness(f: Formula, cap: int = 3000) -> Optional[Dict[str, int]]:
    """Small-box search; returns an assignment or None (inconclusive)."""
    vs = formula_vars(f)
    if not vs:
        return {} if eval_formula(f, {}) else None
    if len(vs) > 6:
        return None
    for bound in (1, 3):
        if (2 * bound + 1) ** len(vs) > cap:
            break
        for combo in itertools.product(range(-bound, bound + 1), repeat=len(vs)):
            env = dict(zip(vs, combo))
            if eval_formula(f, env):
                return env
    return None


def witness(f: Formula, max_bound: int = 1 << 20) -> Optional[Dict[str, int]]:
    """A satisfying assignment, or None if the formula is unsatisfiable.

    Once satisfiability is established the growing box search terminates;
    the bound cap is a safety net against upstream bugs.
    """
    if not satisfiable(f):
        return None
    vs = formula_vars(f)
    if not vs:
        return {}
    bound = 1
    while bound <= max_bound:
        shell = _box_search(f, vs, bound)
        if shell is not None:
            return shell
        bound *= 2
    raise LiaBudgetError("witness search exceeded the bound cap")


def _box_search(f: Formula, vs: Tuple[str, ...], bound: int) -> Optional[Dict[str, int]]:
    if (2 * bound + 1) ** len(vs) > 2_000_000:
        # Too many points to sweep; sample the box instead.
        import random

        rng = random.Random(0xC474)
        for _ in range(200_000):
            env = {v: rng.randint(-bound, bound) for v in vs}
            if eval_formula(f, env):
                return env
        return None
    for combo in itertools.product(range(-bound, bound + 1), repeat=len(vs)):
        env = dict(zip(vs, combo))
        if eval_formula(f, env):
            return env
    return None
