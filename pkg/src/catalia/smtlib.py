"""SMT-LIB2 reading and writing for the supported HORN fragment.

The reader accepts scripts containing ``set-logic``, ``set-info``,
``set-option``, monomorphic ``declare-datatypes``, ``declare-fun`` with
Bool codomain, ``assert`` of universally quantified implications or
quantifier-free facts, and ``check-sat``/``get-model``/``exit`` (ignored).
Anything else raises UnsupportedFeature.

Comparisons are normalized at parse time to the core operator set
(``=``, ``!=``, ``>``, ``<=``); ``not`` is pushed down to atoms and
eliminated (a negated tester becomes the disjunction of the remaining
testers of the sort).  ``let`` bindings are expanded by substitution.

Printing is deterministic: declarations in insertion order, one clause
per assert, stable spacing.  ``parse_system(print_system(s))`` is
alpha-equivalent to ``s``.
"""

from __future__ import annotations

import io
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .terms import (
    INT,
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
    Datatype,
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
    TestApp,
    UnsupportedFeature,
    Var,
    conj,
    disj,
)

Sexp = Union[str, List["Sexp"]]


class SmtParseError(UnsupportedFeature):
    """Malformed or out-of-fragment SMT-LIB input."""


# ======================================================================
# S-expression layer
# ======================================================================

_ATOM_END = set(" \t\r\n();")


def tokenize(text: str) -> Iterator[str]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SmtParseError("unterminated |...| symbol")
            yield text[i : j + 1]
            i = j + 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SmtParseError("unterminated string literal")
            yield text[i : j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in _ATOM_END:
                j += 1
            yield text[i:j]
            i = j


def parse_sexps(text: str) -> List[Sexp]:
    """Parse a whole script into a list of s-expressions."""
    stack: List[List[Sexp]] = [[]]
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SmtParseError("unbalanced '('")
    return stack[0]


def read_sexp(stream: io.TextIOBase) -> Optional[Sexp]:
    """Read one complete s-expression from a character stream.

    Returns None at end of input.  Used by the reference backend's
    read-eval loop, where commands arrive incrementally on stdin.
    """
    depth = 0
    buf: List[str] = []
    in_bar = False
    in_comment = False
    while True:
        ch = stream.read(1)
        if ch == "":
            if buf and "".join(buf).strip():
                raise SmtParseError("unexpected end of input")
            return None
        if in_comment:
            if ch == "\n":
                in_comment = False
            continue
        if in_bar:
            buf.append(ch)
            if ch == "|":
                in_bar = False
            continue
        if ch == ";":
            in_comment = True
            continue
        if ch == "|":
            in_bar = True
            buf.append(ch)
            continue
        buf.append(ch)
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise SmtParseError("unbalanced ')'")
            if depth == 0:
                break
        elif depth == 0 and ch in " \t\r\n":
            if "".join(buf).strip():
                break
            buf = []
    text = "".join(buf).strip()
    if not text:
        return None
    exps = parse_sexps(text)
    if len(exps) != 1:
        raise SmtParseError(f"expected one expression, got {len(exps)}")
    return exps[0]


def sexp_to_str(e: Sexp) -> str:
    if isinstance(e, str):
        return e
    return "(" + " ".join(sexp_to_str(x) for x in e) + ")"


def strip_bars(sym: str) -> str:
    if sym.startswith("|") and sym.endswith("|") and len(sym) >= 2:
        return sym[1:-1]
    return sym


def _expand_lets(e: Sexp, env: Dict[str, Sexp]) -> Sexp:
    """Expand let bindings by parallel substitution, respecting shadowing
    by inner let and quantifier binders."""
    if isinstance(e, str):
        return env.get(strip_bars(e), e)
    if e and e[0] == "let":
        if len(e) != 3 or not isinstance(e[1], list):
            raise SmtParseError("malformed let")
        new_env = dict(env)
        for binding in e[1]:
            if not (isinstance(binding, list) and len(binding) == 2
                    and isinstance(binding[0], str)):
                raise SmtParseError("malformed let binding")
            new_env[strip_bars(binding[0])] = _expand_lets(binding[1], env)
        return _expand_lets(e[2], new_env)
    if e and e[0] in ("forall", "exists") and len(e) == 3:
        inner = dict(env)
        if isinstance(e[1], list):
            for b in e[1]:
                if isinstance(b, list) and b and isinstance(b[0], str):
                    inner.pop(strip_bars(b[0]), None)
        return [e[0], e[1], _expand_lets(e[2], inner)]
    return [_expand_lets(x, env) for x in e]


# ======================================================================
# Parsing systems
# ======================================================================

_ARITH_HEADS = {"+", "-", "*"}
_CMP_HEADS = {"=", "distinct", "<", "<=", ">", ">="}
_REJECTED_HEADS = {"div", "mod", "abs", "ite", "select", "store", "exists"}


class SystemParser:
    """Translates a parsed script into a ChcSystem."""

    def __init__(self) -> None:
        self.system = ChcSystem()
        self.logic: Optional[str] = None
        self._clause_count = 0

    # -- declarations ---------------------------------------------------

    def _parse_sort(self, e: Sexp) -> Sort:
        if not isinstance(e, str):
            raise SmtParseError(f"parametric sort {sexp_to_str(e)} unsupported")
        name = strip_bars(e)
        if name == "Int":
            return INT
        if name == "Bool":
            raise UnsupportedFeature("Bool-sorted term position")
        if name not in self.system.datatypes:
            raise SmtParseError(f"unknown sort {name!r}")
        return Sort(name)

    def _declare_datatypes(self, cmd: List[Sexp]) -> None:
        if len(cmd) != 3 or not isinstance(cmd[1], list) or not isinstance(cmd[2], list):
            raise SmtParseError("malformed declare-datatypes")
        names: List[str] = []
        for decl in cmd[1]:
            if not (isinstance(decl, list) and len(decl) == 2
                    and isinstance(decl[0], str)):
                raise SmtParseError("malformed datatype name declaration")
            if decl[1] != "0":
                raise UnsupportedFeature("parametric datatypes unsupported")
            names.append(strip_bars(decl[0]))
        if len(cmd[2]) != len(names):
            raise SmtParseError("datatype name/body count mismatch")
        # Register names first so mutually recursive fields resolve.
        for name in names:
            if name in self.system.datatypes:
                raise SmtParseError(f"datatype {name!r} redeclared")
            self.system.datatypes[name] = Datatype(name, ())
        for name, body in zip(names, cmd[2]):
            if body and body[0] == "par":
                raise UnsupportedFeature("parametric datatypes unsupported")
            ctors: List[Constructor] = []
            if not isinstance(body, list):
                raise SmtParseError("malformed datatype body")
            for cdecl in body:
                if isinstance(cdecl, str):
                    ctors.append(Constructor(strip_bars(cdecl), ()))
                    continue
                if not cdecl or not isinstance(cdecl[0], str):
                    raise SmtParseError("malformed constructor declaration")
                fields: List[Tuple[str, Sort]] = []
                for f in cdecl[1:]:
                    if not (isinstance(f, list) and len(f) == 2
                            and isinstance(f[0], str)):
                        raise SmtParseError("malformed selector declaration")
                    fsort = f[1]
                    if fsort == "Bool":
                        raise UnsupportedFeature("Bool-sorted constructor field")
                    fields.append((strip_bars(f[0]), self._parse_field_sort(fsort, names)))
                ctors.append(Constructor(strip_bars(cdecl[0]), tuple(fields)))
            self.system.datatypes[name] = Datatype(name, tuple(ctors))

    def _parse_field_sort(self, e: Sexp, pending: Sequence[str]) -> Sort:
        if isinstance(e, str):
            name = strip_bars(e)
            if name == "Int":
                return INT
            if name in pending or name in self.system.datatypes:
                return Sort(name)
            raise SmtParseError(f"unknown field sort {name!r}")
        raise UnsupportedFeature("parametric field sort unsupported")

    def _declare_fun(self, cmd: List[Sexp]) -> None:
        if len(cmd) != 4 or not isinstance(cmd[1], str) or not isinstance(cmd[2], list):
            raise SmtParseError("malformed declare-fun")
        if cmd[3] != "Bool":
            raise UnsupportedFeature(
                f"declare-fun codomain must be Bool, got {sexp_to_str(cmd[3])}"
            )
        name = strip_bars(cmd[1])
        if name in self.system.predicates:
            raise SmtParseError(f"predicate {name!r} redeclared")
        self.system.predicates[name] = tuple(self._parse_sort(s) for s in cmd[2])

    # -- terms and constraints ------------------------------------------

    def _is_ctor(self, name: str) -> bool:
        return any(
            c.name == name
            for dt in self.system.datatypes.values()
            for c in dt.constructors
        )

    def _is_selector(self, name: str) -> bool:
        try:
            self.system.selector_site(name)
            return True
        except SortError:
            return False

    def parse_term(self, e: Sexp, scope: Dict[str, Sort]) -> Term:
        if isinstance(e, str):
            name = strip_bars(e)
            if name.lstrip("-").isdigit():
                return IntVal(int(name))
            if name in scope:
                return Var(name, scope[name])
            if self._is_ctor(name):
                return App(name, (), self.system.constructor_sort(name))
            raise SmtParseError(f"unknown symbol {name!r} in term position")
        if not e:
            raise SmtParseError("empty application")
        head = e[0]
        if isinstance(head, list):
            raise SmtParseError(f"unsupported operator {sexp_to_str(head)}")
        hname = strip_bars(head)
        if hname in _REJECTED_HEADS:
            raise UnsupportedFeature(f"operator {hname!r} unsupported")
        args = [self.parse_term(a, scope) for a in e[1:]]
        if hname == "+":
            return Add(tuple(args))
        if hname == "-":
            if len(args) == 1:
                return Neg(args[0])
            if len(args) == 2:
                return Sub(args[0], args[1])
            raise SmtParseError("subtraction expects one or two operands")
        if hname == "*":
            if len(args) != 2:
                raise SmtParseError("multiplication expects two operands")
            return Mul(args[0], args[1])
        if self._is_ctor(hname):
            return App(hname, tuple(args), self.system.constructor_sort(hname))
        if self._is_selector(hname):
            if len(args) != 1:
                raise SmtParseError(f"selector {hname} expects one operand")
            _, ctor, idx = self.system.selector_site(hname)
            return SelApp(hname, args[0], ctor.fields[idx][1])
        if hname in self.system.predicates:
            raise SmtParseError(f"predicate {hname!r} nested inside a term")
        raise SmtParseError(f"unknown operator {hname!r}")

    def _negate(self, c: Constraint) -> Constraint:
        if isinstance(c, BoolVal):
            return BoolVal(not c.value)
        if isinstance(c, Cmp):
            flips = {"=": "!=", "!=": "=", ">": "<=", "<=": ">"}
            return Cmp(flips[c.op], c.left, c.right)
        if isinstance(c, And):
            return disj([self._negate(p) for p in c.args])
        if isinstance(c, Or):
            return conj([self._negate(p) for p in c.args])
        if isinstance(c, Not):
            return c.arg
        if isinstance(c, TestApp):
            from .terms import sort_of

            dt = self.system.datatype_of(sort_of(c.arg))
            others = [
                TestApp(ct.name, c.arg) for ct in dt.constructors if ct.name != c.ctor
            ]
            return disj(others)
        raise SmtParseError(f"cannot negate {c!r}")

    def parse_constraint(self, e: Sexp, scope: Dict[str, Sort]) -> Constraint:
        if isinstance(e, str):
            name = strip_bars(e)
            if name == "true":
                return TRUE
            if name == "false":
                return BoolVal(False)
            raise SmtParseError(f"symbol {name!r} in constraint position")
        if not e:
            raise SmtParseError("empty constraint application")
        head = e[0]
        if isinstance(head, list):
            # ((_ is C) t)
            if (len(head) == 3 and head[0] == "_" and head[1] == "is"
                    and isinstance(head[2], str)):
                if len(e) != 2:
                    raise SmtParseError("tester expects one operand")
                return TestApp(strip_bars(head[2]), self.parse_term(e[1], scope))
            raise SmtParseError(f"unsupported operator {sexp_to_str(head)}")
        hname = strip_bars(head)
        if hname == "and":
            return conj([self.parse_constraint(a, scope) for a in e[1:]])
        if hname == "or":
            return disj([self.parse_constraint(a, scope) for a in e[1:]])
        if hname == "not":
            if len(e) != 2:
                raise SmtParseError("not expects one operand")
            return self._negate(self.parse_constraint(e[1], scope))
        if hname in _CMP_HEADS:
            args = [self.parse_term(a, scope) for a in e[1:]]
            if hname == "distinct":
                if len(args) < 2:
                    raise SmtParseError("distinct expects two or more operands")
                pairs = [
                    Cmp("!=", args[i], args[j])
                    for i in range(len(args))
                    for j in range(i + 1, len(args))
                ]
                return conj(pairs)
            if len(args) != 2:
                raise SmtParseError(f"{hname} expects two operands")
            a, b = args
            if hname == "=":
                return Cmp("=", a, b)
            if hname == "<":
                return Cmp(">", b, a)
            if hname == "<=":
                return Cmp("<=", a, b)
            if hname == ">":
                return Cmp(">", a, b)
            if hname == ">=":
                return Cmp("<=", b, a)
        if hname in _REJECTED_HEADS:
            raise UnsupportedFeature(f"operator {hname!r} unsupported")
        raise SmtParseError(f"unknown constraint operator {hname!r}")

    def _parse_atom(self, e: Sexp, scope: Dict[str, Sort]) -> Optional[Atom]:
        """An uninterpreted predicate application, or None if ``e`` is not one."""
        if isinstance(e, str):
            name = strip_bars(e)
            if name in self.system.predicates:
                return Atom(name, ())
            return None
        if e and isinstance(e[0], str):
            name = strip_bars(e[0])
            if name in self.system.predicates:
                return Atom(name, tuple(self.parse_term(a, scope) for a in e[1:]))
        return None

    # -- clauses --------------------------------------------------------

    def _contains_predicate(self, e: Sexp) -> bool:
        if isinstance(e, str):
            return strip_bars(e) in self.system.predicates
        return any(self._contains_predicate(x) for x in e)

    def _parse_body(
        self, e: Sexp, scope: Dict[str, Sort]
    ) -> Tuple[Constraint, List[Atom]]:
        """Split an antecedent into its constraint and predicate atoms."""
        pieces: List[Sexp] = []

        def flatten(x: Sexp) -> None:
            if isinstance(x, list) and x and x[0] == "and":
                for y in x[1:]:
                    flatten(y)
            else:
                pieces.append(x)

        flatten(e)
        constraint_parts: List[Constraint] = []
        atoms: List[Atom] = []
        for p in pieces:
            atom = self._parse_atom(p, scope)
            if atom is not None:
                atoms.append(atom)
                continue
            if self._contains_predicate(p):
                raise UnsupportedFeature(
                    "predicate atom under a non-conjunctive connective"
                )
            constraint_parts.append(self.parse_constraint(p, scope))
        return conj(constraint_parts), atoms

    def _parse_clause(self, form: Sexp) -> Clause:
        binders: List[Var] = []
        if isinstance(form, list) and form and form[0] == "forall":
            if len(form) != 3 or not isinstance(form[1], list):
                raise SmtParseError("malformed forall")
            scope: Dict[str, Sort] = {}
            for b in form[1]:
                if not (isinstance(b, list) and len(b) == 2
                        and isinstance(b[0], str)):
                    raise SmtParseError("malformed binder")
                vname = strip_bars(b[0])
                if vname in scope:
                    raise SmtParseError(f"duplicate binder {vname!r}")
                scope[vname] = self._parse_sort(b[1])
                binders.append(Var(vname, scope[vname]))
            body = form[2]
        else:
            scope = {}
            body = form

        # Peel nested implications: (=> a (=> b c)) accumulates a and b.
        antecedents: List[Sexp] = []
        while isinstance(body, list) and body and body[0] == "=>":
            if len(body) < 3:
                raise SmtParseError("malformed =>")
            antecedents.extend(body[1:-1])
            body = body[-1]

        constraint, atoms = (
            self._parse_body(["and"] + antecedents, scope)
            if antecedents
            else (TRUE, [])
        )

        head: Optional[Atom]
        if body == "false":
            head = None
        else:
            head = self._parse_atom(body, scope)
            if head is None:
                if self._contains_predicate(body):
                    raise UnsupportedFeature(
                        "clause head must be a single predicate atom or false"
                    )
                raise UnsupportedFeature(
                    f"clause head {sexp_to_str(body)} is not a predicate atom"
                )

        name = f"c!{self._clause_count}"
        self._clause_count += 1
        return Clause(
            vars=tuple(binders),
            constraint=constraint,
            body=tuple(atoms),
            head=head,
            name=name,
        )

    # -- script ---------------------------------------------------------

    def feed(self, cmd: Sexp) -> None:
        if not isinstance(cmd, list) or not cmd or not isinstance(cmd[0], str):
            raise SmtParseError(f"malformed command {sexp_to_str(cmd)}")
        op = cmd[0]
        if op == "set-logic":
            self.logic = cmd[1] if len(cmd) > 1 and isinstance(cmd[1], str) else None
        elif op in ("set-info", "set-option"):
            pass
        elif op == "declare-datatypes":
            self._declare_datatypes(cmd)
        elif op == "declare-datatype":
            # Sugar: (declare-datatype name (ctors...))
            if len(cmd) != 3:
                raise SmtParseError("malformed declare-datatype")
            self._declare_datatypes(
                ["declare-datatypes", [[cmd[1], "0"]], [cmd[2]]]
            )
        elif op == "declare-fun":
            self._declare_fun(cmd)
        elif op == "assert":
            if len(cmd) != 2:
                raise SmtParseError("malformed assert")
            form = _expand_lets(cmd[1], {})
            # Tolerate (! form :named x) annotations.
            if isinstance(form, list) and form and form[0] == "!":
                label = ""
                for i in range(2, len(form) - 1):
                    if form[i] == ":named" and isinstance(form[i + 1], str):
                        label = strip_bars(form[i + 1])
                clause = self._parse_clause(form[1])
                if label:
                    clause = Clause(
                        clause.vars, clause.constraint, clause.body, clause.head,
                        name=label,
                    )
                self.system.clauses.append(clause)
            else:
                self.system.clauses.append(self._parse_clause(form))
        elif op in ("check-sat", "get-model", "get-proof", "exit", "get-info"):
            pass
        elif op == "declare-const":
            raise UnsupportedFeature("declare-const outside the HORN fragment")
        else:
            raise UnsupportedFeature(f"command {op!r} unsupported")


def parse_system(text: str) -> ChcSystem:
    """Parse an SMT-LIB2 HORN script into a ChcSystem.

    Raises SmtParseError / UnsupportedFeature on malformed or
    out-of-fragment input.  The result is not sort-checked; callers run
    :func:`catalia.terms.check_sorts` when they need the guarantee.
    """
    parser = SystemParser()
    for cmd in parse_sexps(text):
        parser.feed(cmd)
    return parser.system


# ======================================================================
# Printing
# ======================================================================

def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntVal):
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, Add):
        return "(+ " + " ".join(format_term(a) for a in t.args) + ")"
    if isinstance(t, Sub):
        return f"(- {format_term(t.left)} {format_term(t.right)})"
    if isinstance(t, Mul):
        return f"(* {format_term(t.left)} {format_term(t.right)})"
    if isinstance(t, Neg):
        return f"(- {format_term(t.arg)})"
    if isinstance(t, App):
        if not t.args:
            return t.ctor
        return "(" + t.ctor + " " + " ".join(format_term(a) for a in t.args) + ")"
    if isinstance(t, SelApp):
        return f"({t.selector} {format_term(t.arg)})"
    if isinstance(t, FoldApp):
        return f"({fold_fun_name(t.family, t.component)} {format_term(t.arg)})"
    raise TypeError(f"not a term: {t!r}")


def fold_fun_name(family: str, component: int) -> str:
    """Wire name of one integer component of a catamorphism."""
    return f"cata!{family}!{component}"


def format_constraint(c: Constraint) -> str:
    if isinstance(c, BoolVal):
        return "true" if c.value else "false"
    if isinstance(c, Cmp):
        op = {"=": "=", "!=": "distinct", ">": ">", "<=": "<="}[c.op]
        return f"({op} {format_term(c.left)} {format_term(c.right)})"
    if isinstance(c, TestApp):
        return f"((_ is {c.ctor}) {format_term(c.arg)})"
    if isinstance(c, And):
        return "(and " + " ".join(format_constraint(p) for p in c.args) + ")"
    if isinstance(c, Or):
        return "(or " + " ".join(format_constraint(p) for p in c.args) + ")"
    if isinstance(c, Not):
        return f"(not {format_constraint(c.arg)})"
    raise TypeError(f"not a constraint: {c!r}")


def format_atom(a: Atom) -> str:
    if not a.args:
        return a.pred
    return "(" + a.pred + " " + " ".join(format_term(t) for t in a.args) + ")"


def format_clause(cl: Clause, named: bool = False) -> str:
    from .terms import conjuncts_of

    body_parts = [format_constraint(p) for p in conjuncts_of(cl.constraint)]
    body_parts += [format_atom(a) for a in cl.body]
    head = "false" if cl.head is None else format_atom(cl.head)
    if body_parts:
        if len(body_parts) == 1:
            inner = f"(=> {body_parts[0]} {head})"
        else:
            inner = f"(=> (and {' '.join(body_parts)}) {head})"
    else:
        inner = head
    if cl.vars:
        binders = " ".join(f"({v.name} {v.sort.name})" for v in cl.vars)
        inner = f"(forall ({binders}) {inner})"
    if named and cl.name:
        inner = f"(! {inner} :named {cl.name})"
    return f"(assert {inner})"


def format_datatypes(system: ChcSystem) -> str:
    if not system.datatypes:
        return ""
    names = " ".join(f"({dt.name} 0)" for dt in system.datatypes.values())
    bodies = []
    for dt in system.datatypes.values():
        ctors = []
        for ctor in dt.constructors:
            if not ctor.fields:
                ctors.append(f"({ctor.name})")
            else:
                fields = " ".join(f"({sel} {s.name})" for sel, s in ctor.fields)
                ctors.append(f"({ctor.name} {fields})")
        bodies.append("(" + " ".join(ctors) + ")")
    return f"(declare-datatypes ({names}) ({' '.join(bodies)}))"


def print_system(
    system: ChcSystem, named: bool = False, check_sat: bool = True
) -> str:
    """Render a full HORN script, deterministically."""
    lines = ["(set-logic HORN)"]
    dts = format_datatypes(system)
    if dts:
        lines.append(dts)
    for pred, sig in system.predicates.items():
        args = " ".join(s.name for s in sig)
        lines.append(f"(declare-fun {pred} ({args}) Bool)")
    for cl in system.clauses:
        lines.append(format_clause(cl, named=named))
    if check_sat:
        lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ======================================================================
# Model value parsing (shared by the backend client)
# ======================================================================

def parse_ground_value(e: Sexp, sort: Sort, system: ChcSystem):
    """Parse a model value: an integer literal or a ground constructor term."""
    if sort.is_int:
        return _parse_int_value(e)
    if isinstance(e, str):
        name = strip_bars(e)
        dt = system.datatype_of(sort)
        for ctor in dt.constructors:
            if ctor.name == name and not ctor.fields:
                return App(name, (), sort)
        raise SmtParseError(f"unknown {sort} value {name!r}")
    if not e or not isinstance(e[0], str):
        raise SmtParseError(f"malformed value {sexp_to_str(e)}")
    name = strip_bars(e[0])
    if name == "as" and len(e) == 3:
        return parse_ground_value(e[1], sort, system)
    dt = system.datatype_of(sort)
    ctor = dt.constructor(name)
    if len(e) - 1 != ctor.arity:
        raise SmtParseError(f"constructor {name} arity mismatch in value")
    args = tuple(
        IntVal(parse_ground_value(a, fs, system))
        if fs.is_int
        else parse_ground_value(a, fs, system)
        for a, (_, fs) in zip(e[1:], ctor.fields)
    )
    return App(name, args, sort)


def _parse_int_value(e: Sexp) -> int:
    if isinstance(e, str):
        s = strip_bars(e)
        if s.lstrip("-").isdigit():
            return int(s)
        raise SmtParseError(f"expected integer value, got {s!r}")
    if len(e) == 2 and e[0] == "-":
        return -_parse_int_value(e[1])
    raise SmtParseError(f"expected integer value, got {sexp_to_str(e)}")
