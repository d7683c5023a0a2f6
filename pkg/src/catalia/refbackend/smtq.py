"""Satisfiability of quantifier-free scripts over datatypes and integers.

Three routes, picked by inspecting the asserted conjunction:

* integer-only and linear: decide exactly with the arithmetic engine.
* integer-only but with products of variables: enumerate the finite grid
  spanned by interval bounds found among the conjuncts; complete whenever
  every variable is bounded and the grid is not absurdly large.
* datatype constants involved: if the formula is a positive boolean
  combination whose datatype atoms are equalities, expand to disjuncts
  and decide each by unification plus integer reasoning (complete).
  Otherwise, or when recursively defined functions are applied,
  enumerate constructor shapes of growing size with symbolic integer
  fields, partially evaluate the functions on each shape, and hand the
  residue to the arithmetic engine.  That route is a semi-decision: a
  model found is genuine, exhausting the size cap reports unknown.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from . import lia
from .lia import LiaBudgetError
from .rterm import (
    BackendInputError,
    NonlinearTerm,
    Tables,
    Value,
    eval_formula,
    term_sort,
    to_lia,
    to_lin,
)

GRID_CAP = 200_000
DNF_CAP = 256
DEFAULT_SHAPE_CAP = 10


class SmtQuery:
    def __init__(self, asserts: Sequence[tuple], tables: Tables, shape_cap: int = DEFAULT_SHAPE_CAP):
        self.formula = ("and",) + tuple(asserts) if len(asserts) != 1 else asserts[0]
        if not asserts:
            self.formula = ("true",)
        self.tables = tables
        self.shape_cap = shape_cap
        self.int_vars = [v for v, s in tables.consts.items() if s == "Int"]
        self.adt_vars = [v for v, s in tables.consts.items() if s != "Int"]

    # -- entry point --------------------------------------------------

    def check(self):
        """Returns ('sat', {name: value}), ('unsat', None) or ('unknown', why)."""
        if (
            not self.adt_vars
            and not _has_calls(self.formula)
            and not _has_apps(self.formula)
        ):
            return self._check_int(self.formula, self.int_vars)
        conjs = self._try_dnf()
        if conjs is not None:
            return self._check_dnf(conjs)
        return self._check_shapes()

    # -- integer-only -------------------------------------------------

    def _check_int(self, formula: tuple, vars: List[str]):
        try:
            f = to_lia(formula)
        except NonlinearTerm:
            return self._check_grid(formula, vars)
        try:
            if not lia.satisfiable(f):
                return ("unsat", None)
            env = lia.witness(f)
        except LiaBudgetError:
            return ("unknown", "arithmetic budget exhausted")
        model: Dict[str, Value] = {v: env.get(v, 0) for v in vars}
        return ("sat", model)

    def _check_grid(self, formula: tuple, vars: List[str]):
        bounds: Dict[str, List[Optional[int]]] = {v: [None, None] for v in vars}
        for atom in _conjuncts(formula):
            self._note_bound(atom, bounds)
        ranges = []
        total = 1
        for v in vars:
            lo, hi = bounds[v]
            if lo is None or hi is None or lo > hi:
                return ("unknown", f"no finite bounds for {v}")
            ranges.append(range(lo, hi + 1))
            total *= hi - lo + 1
            if total > GRID_CAP:
                return ("unknown", "bound grid too large")
        for point in itertools.product(*ranges):
            env = dict(zip(vars, point))
            if eval_formula(formula, env, self.tables):
                return ("sat", dict(env))
        return ("unsat", None)

    def _note_bound(self, atom: tuple, bounds) -> None:
        if atom[0] not in ("<=", "<", ">=", ">", "="):
            return
        try:
            d = to_lin(atom[1]).sub(to_lin(atom[2]))
        except NonlinearTerm:
            return
        if len(d.coeffs) != 1:
            return
        (v, c), k = d.coeffs[0], d.const
        if v not in bounds or abs(c) != 1:
            return
        lo, hi = bounds[v]
        op = atom[0]
        # c*v + k  op  0
        if op == "=":
            val = -k // c
            if val * c + k == 0:
                bounds[v] = [val, val]
            return
        if op in ("<", "<="):
            limit = -k - (1 if op == "<" else 0)
            if c == 1:
                hi = limit if hi is None else min(hi, limit)
            else:
                lo = -limit if lo is None else max(lo, -limit)
        else:
            limit = -k + (1 if op == ">" else 0)
            if c == 1:
                lo = limit if lo is None else max(lo, limit)
            else:
                hi = -limit if hi is None else min(hi, -limit)
        bounds[v] = [lo, hi]

    # -- disjunct-by-disjunct unification ----------------------------

    def _try_dnf(self) -> Optional[List[List[tuple]]]:
        """NNF then DNF, or None when unsuitable (calls, datatype
        disequalities, or too many disjuncts)."""
        if _has_calls(self.formula):
            return None
        try:
            nnf = self._nnf(self.formula, False)
        except BackendInputError:
            return None
        disjuncts = [[]]
        def expand(f: tuple) -> bool:
            nonlocal disjuncts
            if f[0] == "and":
                for p in f[1:]:
                    if not expand(p):
                        return False
                return True
            if f[0] == "or":
                base = disjuncts
                merged = []
                for p in f[1:]:
                    disjuncts = [list(d) for d in base]
                    if not expand(p):
                        return False
                    merged.extend(disjuncts)
                disjuncts = merged
                return len(disjuncts) <= DNF_CAP
            for d in disjuncts:
                d.append(f)
            return True
        if not expand(nnf):
            return None
        for d in disjuncts:
            for lit in d:
                if lit[0] == "distinct" and self._is_adt_term(lit[1]):
                    return None
        return disjuncts

    def _nnf(self, f: tuple, neg: bool) -> tuple:
        tag = f[0]
        if tag == "true":
            return ("false",) if neg else f
        if tag == "false":
            return ("true",) if neg else f
        if tag == "not":
            return self._nnf(f[1], not neg)
        if tag == "and":
            parts = tuple(self._nnf(p, neg) for p in f[1:])
            return ("or",) + parts if neg else ("and",) + parts
        if tag == "or":
            parts = tuple(self._nnf(p, neg) for p in f[1:])
            return ("and",) + parts if neg else ("or",) + parts
        if not neg:
            return f
        flips = {"=": "distinct", "distinct": "=", "<": ">=", "<=": ">",
                 ">": "<=", ">=": "<"}
        return (flips[tag], f[1], f[2])

    def _is_adt_term(self, t: tuple) -> bool:
        try:
            return term_sort(t, {}, self.tables) != "Int"
        except (BackendInputError, KeyError):
            return False

    def _check_dnf(self, disjuncts: List[List[tuple]]):
        saw_unknown = None
        for lits in disjuncts:
            out = self._check_conjunct(lits)
            if out[0] == "sat":
                return out
            if out[0] == "unknown":
                saw_unknown = out
        if saw_unknown is not None:
            return saw_unknown
        return ("unsat", None)

    def _check_conjunct(self, lits: List[tuple]):
        adt_eqs = []
        int_lits = []
        for lit in lits:
            if lit[0] == "=" and self._is_adt_term(lit[1]):
                adt_eqs.append((lit[1], lit[2]))
            else:
                int_lits.append(lit)
        bindings: Dict[str, tuple] = {}
        int_eqs: List[tuple] = []
        pending = list(adt_eqs)
        while pending:
            a, b = pending.pop()
            a, b = self._walk(a, bindings), self._walk(b, bindings)
            if a == b:
                continue
            if a[0] == "var" or b[0] == "var":
                if b[0] == "var" and a[0] != "var":
                    a, b = b, a
                if self._occurs(a[1], b, bindings):
                    return ("unsat", None)
                bindings[a[1]] = b
                continue
            if a[0] == "app" and b[0] == "app":
                if a[1] != b[1]:
                    return ("unsat", None)
                fields = self.tables.ctor_fields(a[1])
                for (fa, fb), (_, fsort) in zip(zip(a[2:], b[2:]), fields):
                    if fsort == "Int":
                        int_eqs.append(("=", fa, fb))
                    else:
                        pending.append((fa, fb))
                continue
            return ("unknown", "datatype equality outside the constructor fragment")
        residue = ("and",) + tuple(int_lits + int_eqs)
        try:
            f = to_lia(residue)
            if not lia.satisfiable(f):
                return ("unsat", None)
            env = lia.witness(f)
        except NonlinearTerm:
            return ("unknown", "nonlinear residue")
        except LiaBudgetError:
            return ("unknown", "arithmetic budget exhausted")
        model: Dict[str, Value] = {v: env.get(v, 0) for v in self.int_vars}
        for v in self.adt_vars:
            model[v] = self._ground(("var", v), bindings, env)
        return ("sat", model)

    def _walk(self, t: tuple, bindings) -> tuple:
        while t[0] == "var" and t[1] in bindings:
            t = bindings[t[1]]
        return t

    def _occurs(self, name: str, t: tuple, bindings) -> bool:
        t = self._walk(t, bindings)
        if t[0] == "var":
            return t[1] == name
        if t[0] == "app":
            fields = self.tables.ctor_fields(t[1])
            return any(
                fsort != "Int" and self._occurs(name, f, bindings)
                for f, (_, fsort) in zip(t[2:], fields)
            )
        return False

    def _ground(self, t: tuple, bindings, env: Dict[str, int]) -> Value:
        t = self._walk(t, bindings)
        if t[0] == "var":
            return self._minimal_value(self.tables.consts.get(t[1]) or "?", t[1])
        if t[0] == "app":
            fields = self.tables.ctor_fields(t[1])
            vals = []
            for f, (_, fsort) in zip(t[2:], fields):
                if fsort == "Int":
                    vals.append(_eval_lin_term(f, env))
                else:
                    vals.append(self._ground(f, bindings, env))
            return ("c", t[1], tuple(vals))
        raise BackendInputError(f"cannot ground {t!r}")

    def _minimal_value(self, sort: str, _hint: str) -> Value:
        ctors = self.tables.datatypes.get(sort)
        if ctors is None:
            return 0
        for ctor, fields in ctors:
            if all(fs == "Int" for _, fs in fields):
                return ("c", ctor, tuple(0 for _ in fields))
        ctor, fields = ctors[0]
        return (
            "c",
            ctor,
            tuple(
                0 if fs == "Int" else self._minimal_value(fs, _hint)
                for _, fs in fields
            ),
        )

    # -- shape enumeration -------------------------------------------

    def _check_shapes(self):
        if not self.adt_vars:
            # calls applied to ground datatype terms only
            reduced = _partial_eval_formula(self.formula, {}, self.tables)
            if reduced is None:
                return ("unknown", "could not evaluate applied functions")
            return self._check_int(self._decompose_adt(reduced), self.int_vars)
        k = len(self.adt_vars)
        for total in range(k, self.shape_cap * k + 1):
            for split in _compositions(total, k):
                per_var = []
                for v, n in zip(self.adt_vars, split):
                    shapes = list(
                        _shapes(self.tables, self.tables.consts[v], n, v)
                    )
                    per_var.append(shapes)
                for combo in itertools.product(*per_var):
                    out = self._check_one_combo(combo)
                    if out is not None:
                        return out
        return ("unknown", f"no model among shapes up to size {self.shape_cap}")

    def _check_one_combo(self, combo: Sequence[tuple]):
        senv = dict(zip(self.adt_vars, combo))
        reduced = _partial_eval_formula(self.formula, senv, self.tables)
        if reduced is None:
            return None
        flat = self._decompose_adt(reduced)
        shape_vars = sorted(set(_int_vars_of(flat)) | set(self.int_vars))
        out = self._check_int(flat, shape_vars)
        if out[0] != "sat":
            return None
        env = {v: x for v, x in out[1].items() if isinstance(x, int)}
        model: Dict[str, Value] = {v: env.get(v, 0) for v in self.int_vars}
        for v, shape in zip(self.adt_vars, combo):
            model[v] = _shape_value(shape, env, self.tables)
        return ("sat", model)

    def _decompose_adt(self, f: tuple) -> tuple:
        tag = f[0]
        if tag in ("and", "or"):
            return (tag,) + tuple(self._decompose_adt(p) for p in f[1:])
        if tag == "not":
            return ("not", self._decompose_adt(f[1]))
        if tag in ("=", "distinct"):
            a, b = f[1], f[2]
            if a[0] == "app" or b[0] == "app":
                eq = self._decompose_eq(a, b)
                return ("not", eq) if tag == "distinct" else eq
        return f

    def _decompose_eq(self, a: tuple, b: tuple) -> tuple:
        if a[0] == "app" and b[0] == "app":
            if a[1] != b[1]:
                return ("false",)
            parts = []
            fields = self.tables.ctor_fields(a[1])
            for (fa, fb), (_, fsort) in zip(zip(a[2:], b[2:]), fields):
                if fsort == "Int":
                    parts.append(("=", fa, fb))
                else:
                    parts.append(self._decompose_eq(fa, fb))
            if not parts:
                return ("true",)
            return ("and",) + tuple(parts)
        raise BackendInputError("datatype equality with a non-constructor side")


# ======================================================================
# Shape machinery
# ======================================================================

def _has_calls(f: tuple) -> bool:
    if f[0] == "call":
        return True
    return any(isinstance(p, tuple) and _has_calls(p) for p in f[1:])


def _has_apps(f: tuple) -> bool:
    """Constructor applications can appear with no ADT constant in sight
    (two ground trees equated under an all-integer scope)."""
    if f[0] == "app":
        return True
    return any(isinstance(p, tuple) and _has_apps(p) for p in f[1:])


def _conjuncts(f: tuple) -> Iterator[tuple]:
    if f[0] == "and":
        for p in f[1:]:
            yield from _conjuncts(p)
    else:
        yield f


def _compositions(total: int, k: int) -> Iterator[Tuple[int, ...]]:
    if k == 1:
        yield (total,)
        return
    for first in range(1, total - k + 2):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


def _shapes(tables: Tables, sort: str, size: int, prefix: str, counter=None) -> Iterator[tuple]:
    """Constructor trees with `size` constructor nodes; integer fields
    become fresh symbolic variables named under `prefix`."""
    if counter is None:
        counter = itertools.count()
    ctors = tables.datatypes.get(sort)
    if ctors is None:
        raise BackendInputError(f"not a datatype sort: {sort}")
    for ctor, fields in ctors:
        rec = [(i, fs) for i, (_, fs) in enumerate(fields) if fs != "Int"]
        if not rec:
            if size == 1:
                args = tuple(
                    ("var", f"{prefix}!sh!{next(counter)}") for _ in fields
                )
                yield ("app", ctor) + args
            continue
        if size < 1 + len(rec):
            continue
        for split in _compositions(size - 1, len(rec)):
            child_lists = []
            ok = True
            for (i, fs), n in zip(rec, split):
                opts = list(_shapes(tables, fs, n, f"{prefix}!{i}", counter))
                if not opts:
                    ok = False
                    break
                child_lists.append(opts)
            if not ok:
                continue
            for picks in itertools.product(*child_lists):
                args: List[tuple] = []
                ri = 0
                for j, (_, fs) in enumerate(fields):
                    if fs == "Int":
                        args.append(("var", f"{prefix}!sh!{next(counter)}"))
                    else:
                        args.append(picks[ri])
                        ri += 1
                yield ("app", ctor) + tuple(args)


def _partial_eval_term(t: tuple, senv: Dict[str, tuple], tables: Tables, fuel: List[int]) -> Optional[tuple]:
    tag = t[0]
    if tag in ("int",):
        return t
    if tag == "var":
        return senv.get(t[1], t)
    if tag in ("add", "sub", "mul", "neg", "app"):
        head = t[:2] if tag == "app" else (tag,)
        rest = t[2:] if tag == "app" else t[1:]
        parts = []
        for a in rest:
            r = _partial_eval_term(a, senv, tables, fuel)
            if r is None:
                return None
            parts.append(r)
        return head + tuple(parts)
    if tag == "call":
        if fuel[0] <= 0:
            return None
        fuel[0] -= 1
        params, _, body = tables.funs[t[1]]
        inner: Dict[str, tuple] = {}
        for (p, _), a in zip(params, t[2:]):
            r = _partial_eval_term(a, senv, tables, fuel)
            if r is None:
                return None
            inner[p] = r
        return _partial_eval_term(body, inner, tables, fuel)
    if tag == "match":
        scrut = _partial_eval_term(t[1], senv, tables, fuel)
        if scrut is None or scrut[0] != "app":
            return None
        for ctor, names, body in t[2]:
            if ctor == scrut[1]:
                inner = dict(senv)
                for n, v in zip(names, scrut[2:]):
                    inner[n] = v
                return _partial_eval_term(body, inner, tables, fuel)
        return None
    return None


def _partial_eval_formula(f: tuple, senv: Dict[str, tuple], tables: Tables) -> Optional[tuple]:
    fuel = [100_000]
    def go(g: tuple) -> Optional[tuple]:
        tag = g[0]
        if tag in ("true", "false"):
            return g
        if tag in ("and", "or"):
            parts = []
            for p in g[1:]:
                r = go(p)
                if r is None:
                    return None
                parts.append(r)
            return (tag,) + tuple(parts)
        if tag == "not":
            r = go(g[1])
            return None if r is None else ("not", r)
        a = _partial_eval_term(g[1], senv, tables, fuel)
        b = _partial_eval_term(g[2], senv, tables, fuel)
        if a is None or b is None:
            return None
        return (tag, a, b)
    return go(f)


def _int_vars_of(f: tuple) -> Iterator[str]:
    def from_term(t: tuple) -> Iterator[str]:
        if t[0] == "var":
            yield t[1]
        else:
            for a in t[1:]:
                if isinstance(a, tuple):
                    yield from from_term(a)
    if f[0] in ("and", "or"):
        for p in f[1:]:
            yield from _int_vars_of(p)
    elif f[0] == "not":
        yield from _int_vars_of(f[1])
    elif f[0] in ("=", "distinct", "<", "<=", ">", ">="):
        yield from from_term(f[1])
        yield from from_term(f[2])


def _shape_value(shape: tuple, env: Dict[str, int], tables: Tables) -> Value:
    if shape[0] == "var":
        return env.get(shape[1], 0)
    assert shape[0] == "app"
    fields = tables.ctor_fields(shape[1])
    vals = []
    for a, (_, fsort) in zip(shape[2:], fields):
        if fsort == "Int":
            vals.append(_eval_lin_term(a, env))
        else:
            vals.append(_shape_value(a, env, tables))
    return ("c", shape[1], tuple(vals))


def _eval_lin_term(t: tuple, env: Dict[str, int]) -> int:
    tag = t[0]
    if tag == "int":
        return t[1]
    if tag == "var":
        return env.get(t[1], 0)
    if tag == "add":
        return sum(_eval_lin_term(a, env) for a in t[1:])
    if tag == "sub":
        return _eval_lin_term(t[1], env) - _eval_lin_term(t[2], env)
    if tag == "neg":
        return -_eval_lin_term(t[1], env)
    if tag == "mul":
        return _eval_lin_term(t[1], env) * _eval_lin_term(t[2], env)
    raise BackendInputError(f"cannot evaluate field {t!r}")
