"""The reference backend's own term and formula representation.

Deliberately separate from the main package's IR: this side of the wire
re-reads SMT-LIB from scratch so cross-checks between package and backend
compare independent implementations.

Terms and formulas are nested tuples:

    term:    ('int', k) | ('var', name) | ('add', t...) | ('sub', a, b)
             | ('neg', t) | ('mul', a, b) | ('app', ctor, t...)
             | ('call', fun, t...) | ('match', t, ((ctor, names, body), ...))
    formula: ('true',) | ('false',) | ('and', f...) | ('or', f...)
             | ('not', f) | (op, a, b)  for op in =, distinct, <, <=, >, >=

Values are python ints or ('c', ctor, (value, ...)) trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from . import lia
from .lia import Lin

Sexp = Union[str, list]

CMPS = ("=", "distinct", "<", "<=", ">", ">=")


class BackendInputError(Exception):
    """Malformed or unsupported input script."""


@dataclass
class Tables:
    """Symbol tables accumulated from declarations."""

    # datatype name -> list of (ctor, [(selector, field sort name)])
    datatypes: Dict[str, List[Tuple[str, List[Tuple[str, str]]]]] = field(
        default_factory=dict
    )
    consts: Dict[str, str] = field(default_factory=dict)  # name -> sort name
    preds: Dict[str, List[str]] = field(default_factory=dict)
    # fun name -> (params [(name, sort)], return sort, body term)
    funs: Dict[str, Tuple[List[Tuple[str, str]], str, tuple]] = field(
        default_factory=dict
    )

    def ctor_sort(self, ctor: str) -> Optional[str]:
        for dt, ctors in self.datatypes.items():
            for name, _ in ctors:
                if name == ctor:
                    return dt
        return None

    def ctor_fields(self, ctor: str) -> List[Tuple[str, str]]:
        for ctors in self.datatypes.values():
            for name, fields in ctors:
                if name == ctor:
                    return fields
        raise BackendInputError(f"unknown constructor {ctor!r}")


def strip(sym: str) -> str:
    if sym.startswith("|") and sym.endswith("|"):
        return sym[1:-1]
    return sym


# ======================================================================
# Reading terms and formulas from s-expressions
# ======================================================================

def read_term(e: Sexp, scope: Dict[str, str], tables: Tables) -> tuple:
    if isinstance(e, str):
        s = strip(e)
        if s.lstrip("-").isdigit():
            return ("int", int(s))
        if s in scope or s in tables.consts:
            return ("var", s)
        if tables.ctor_sort(s) is not None:
            return ("app", s)
        raise BackendInputError(f"unknown symbol {s!r}")
    if not e:
        raise BackendInputError("empty term")
    head = e[0]
    if isinstance(head, list):
        raise BackendInputError("unsupported higher-order head")
    h = strip(head)
    if h == "match":
        if len(e) != 3 or not isinstance(e[2], list):
            raise BackendInputError("malformed match")
        scrut = read_term(e[1], scope, tables)
        branches = []
        for br in e[2]:
            if not (isinstance(br, list) and len(br) == 2):
                raise BackendInputError("malformed match branch")
            pat = br[0]
            if isinstance(pat, str):
                ctor, names = strip(pat), ()
            else:
                ctor = strip(pat[0])
                names = tuple(strip(p) for p in pat[1:])
            fields = tables.ctor_fields(ctor)
            inner = dict(scope)
            for n, (_, fs) in zip(names, fields):
                inner[n] = fs
            branches.append((ctor, names, read_term(br[1], inner, tables)))
        return ("match", scrut, tuple(branches))
    args = tuple(read_term(a, scope, tables) for a in e[1:])
    if h == "+":
        return ("add",) + args
    if h == "-":
        if len(args) == 1:
            return ("neg", args[0])
        if len(args) == 2:
            return ("sub", args[0], args[1])
        raise BackendInputError("subtraction arity")
    if h == "*":
        if len(args) != 2:
            raise BackendInputError("multiplication arity")
        return ("mul", args[0], args[1])
    if tables.ctor_sort(h) is not None:
        return ("app", h) + args
    if h in tables.funs:
        return ("call", h) + args
    raise BackendInputError(f"unknown operator {h!r}")


def read_formula(e: Sexp, scope: Dict[str, str], tables: Tables) -> tuple:
    if isinstance(e, str):
        s = strip(e)
        if s == "true":
            return ("true",)
        if s == "false":
            return ("false",)
        raise BackendInputError(f"symbol {s!r} is not a formula")
    if not e:
        raise BackendInputError("empty formula")
    h = e[0] if isinstance(e[0], str) else None
    if h == "and":
        return ("and",) + tuple(read_formula(a, scope, tables) for a in e[1:])
    if h == "or":
        return ("or",) + tuple(read_formula(a, scope, tables) for a in e[1:])
    if h == "not":
        if len(e) != 2:
            raise BackendInputError("not arity")
        return ("not", read_formula(e[1], scope, tables))
    if h in CMPS:
        if len(e) != 3:
            raise BackendInputError(f"{h} expects two operands")
        return (h, read_term(e[1], scope, tables), read_term(e[2], scope, tables))
    raise BackendInputError(f"unknown connective {e[0]!r}")


# ======================================================================
# Sort inference and evaluation
# ======================================================================

def term_sort(t: tuple, scope: Dict[str, str], tables: Tables) -> str:
    tag = t[0]
    if tag == "int" or tag in ("add", "sub", "mul", "neg"):
        return "Int"
    if tag == "var":
        name = t[1]
        if name in scope:
            return scope[name]
        return tables.consts[name]
    if tag == "app":
        s = tables.ctor_sort(t[1])
        assert s is not None
        return s
    if tag == "call":
        return tables.funs[t[1]][1]
    if tag == "match":
        _, names, body = t[2][0]
        inner = dict(scope)
        for n, (_, fs) in zip(names, tables.ctor_fields(t[2][0][0])):
            inner[n] = fs
        return term_sort(body, inner, tables)
    raise BackendInputError(f"cannot sort term {t!r}")


Value = Union[int, tuple]  # int | ('c', ctor, (values...))


def eval_term(t: tuple, env: Dict[str, Value], tables: Tables, fuel: int = 100000) -> Value:
    tag = t[0]
    if tag == "int":
        return t[1]
    if tag == "var":
        return env[t[1]]
    if tag == "add":
        return sum(eval_term(a, env, tables, fuel) for a in t[1:])  # type: ignore[misc]
    if tag == "sub":
        return eval_term(t[1], env, tables, fuel) - eval_term(t[2], env, tables, fuel)  # type: ignore[operator]
    if tag == "mul":
        return eval_term(t[1], env, tables, fuel) * eval_term(t[2], env, tables, fuel)  # type: ignore[operator]
    if tag == "neg":
        return -eval_term(t[1], env, tables, fuel)  # type: ignore[operator]
    if tag == "app":
        return ("c", t[1], tuple(eval_term(a, env, tables, fuel) for a in t[2:]))
    if tag == "call":
        params, _, body = tables.funs[t[1]]
        if fuel <= 0:
            raise BackendInputError("recursion fuel exhausted")
        args = [eval_term(a, env, tables, fuel) for a in t[2:]]
        inner = {p: v for (p, _), v in zip(params, args)}
        return eval_term(body, inner, tables, fuel - 1)
    if tag == "match":
        scrut = eval_term(t[1], env, tables, fuel)
        if not (isinstance(scrut, tuple) and scrut[0] == "c"):
            raise BackendInputError("match on a non-constructor value")
        for ctor, names, body in t[2]:
            if ctor == scrut[1]:
                inner = dict(env)
                for n, v in zip(names, scrut[2]):
                    inner[n] = v
                return eval_term(body, inner, tables, fuel)
        raise BackendInputError(f"no match branch for {scrut[1]}")
    raise BackendInputError(f"cannot evaluate {t!r}")


def eval_formula(f: tuple, env: Dict[str, Value], tables: Tables) -> bool:
    tag = f[0]
    if tag == "true":
        return True
    if tag == "false":
        return False
    if tag == "and":
        return all(eval_formula(p, env, tables) for p in f[1:])
    if tag == "or":
        return any(eval_formula(p, env, tables) for p in f[1:])
    if tag == "not":
        return not eval_formula(f[1], env, tables)
    a = eval_term(f[1], env, tables)
    b = eval_term(f[2], env, tables)
    if tag == "=":
        return a == b
    if tag == "distinct":
        return a != b
    if tag == "<":
        return a < b  # type: ignore[operator]
    if tag == "<=":
        return a <= b  # type: ignore[operator]
    if tag == ">":
        return a > b  # type: ignore[operator]
    if tag == ">=":
        return a >= b  # type: ignore[operator]
    raise BackendInputError(f"cannot evaluate formula {f!r}")


# ======================================================================
# Translation of integer terms to linear expressions
# ======================================================================

class NonlinearTerm(Exception):
    """The term multiplies two non-constant subterms."""


def to_lin(t: tuple) -> Lin:
    tag = t[0]
    if tag == "int":
        return Lin.const_of(t[1])
    if tag == "var":
        return Lin.var(t[1])
    if tag == "add":
        out = Lin.const_of(0)
        for a in t[1:]:
            out = out.add(to_lin(a))
        return out
    if tag == "sub":
        return to_lin(t[1]).sub(to_lin(t[2]))
    if tag == "neg":
        return to_lin(t[1]).scale(-1)
    if tag == "mul":
        l, r = to_lin(t[1]), to_lin(t[2])
        if l.is_const():
            return r.scale(l.const)
        if r.is_const():
            return l.scale(r.const)
        raise NonlinearTerm(t)
    raise NonlinearTerm(t)


def to_lia(f: tuple) -> lia.Formula:
    """Translate an integer-only formula to the LIA engine's language.

    Raises NonlinearTerm if a genuine product of variables occurs.
    """
    tag = f[0]
    if tag == "true":
        return lia.T
    if tag == "false":
        return lia.F
    if tag == "and":
        return lia.conj(to_lia(p) for p in f[1:])
    if tag == "or":
        return lia.disj(to_lia(p) for p in f[1:])
    if tag == "not":
        return lia.negate(to_lia(f[1]))
    a, b = to_lin(f[1]), to_lin(f[2])
    d = a.sub(b)
    if tag == "=":
        return lia.eq0(d)
    if tag == "distinct":
        return lia.ne0(d)
    if tag == "<":
        return lia.le0(d.add(Lin.const_of(1)))
    if tag == "<=":
        return lia.le0(d)
    if tag == ">":
        return lia.le0(b.sub(a).add(Lin.const_of(1)))
    if tag == ">=":
        return lia.le0(b.sub(a))
    raise BackendInputError(f"cannot translate {f!r}")
