"""Read-eval loop of the reference backend.

Commands arrive as s-expressions on stdin, one response per command that
warrants one.  `check-sat` answers with a single verdict line (sat, unsat
or unknown); `get-model` and `get-proof` answer with the artifact kept
from the last check.  Scripts whose logic is HORN go to the clause
engine, everything else to the quantifier-free query engine.
"""

from __future__ import annotations

import sys
from typing import List, Optional, Tuple

from ..smtlib import SmtParseError, read_sexp
from . import horn, smtq
from .rterm import BackendInputError, Tables, Value, read_formula, read_term, strip


def _format_value(v: Value, sort: str) -> str:
    if isinstance(v, int):
        return str(v) if v >= 0 else f"(- {-v})"
    _, ctor, args = v
    if not args:
        return ctor
    inner = []
    for a in args:
        inner.append(_format_value(a, "?"))
    return "(" + ctor + " " + " ".join(inner) + ")"


class Engine:
    def __init__(self, out=None, shape_cap: int = smtq.DEFAULT_SHAPE_CAP):
        self.out = out if out is not None else sys.stdout
        self.shape_cap = shape_cap
        self.logic: Optional[str] = None
        self.tables = Tables()
        self.asserts: List[Tuple[str, object]] = []  # (name, raw sexp)
        self.auto_names = 0
        self.last_model: Optional[str] = None
        self.last_proof: Optional[str] = None
        self.last_reason: Optional[str] = None

    # -- plumbing -----------------------------------------------------

    def _reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def run(self, stream) -> None:
        while True:
            try:
                e = read_sexp(stream)
            except SmtParseError as exc:
                self._reply(f'(error "{exc}")')
                return
            if e is None:
                return
            try:
                if self.dispatch(e):
                    return
            except (BackendInputError, SmtParseError, KeyError) as exc:
                self._reply(f'(error "{exc}")')

    # -- command handling --------------------------------------------

    def dispatch(self, e) -> bool:
        """Handle one command; True means exit."""
        if not isinstance(e, list) or not e:
            raise BackendInputError(f"not a command: {e!r}")
        head = strip(e[0]) if isinstance(e[0], str) else None
        if head == "exit":
            return True
        if head in ("set-info", "set-option", "set-logic"):
            if head == "set-logic" and len(e) == 2:
                self.logic = strip(e[1])
            return False
        if head == "declare-datatypes":
            self._declare_datatypes(e)
            return False
        if head == "declare-datatype":
            if len(e) != 3:
                raise BackendInputError("declare-datatype arity")
            self._add_datatype(strip(e[1]), e[2])
            return False
        if head == "declare-fun":
            if len(e) != 4 or not isinstance(e[2], list):
                raise BackendInputError("declare-fun arity")
            name = strip(e[1])
            doms = [strip(s) for s in e[2]]
            ret = strip(e[3]) if isinstance(e[3], str) else None
            if ret == "Bool":
                self.tables.preds[name] = doms
            elif not doms and ret is not None:
                self.tables.consts[name] = ret
            else:
                raise BackendInputError("only relations and constants are supported")
            return False
        if head == "declare-const":
            if len(e) != 3 or not isinstance(e[2], str):
                raise BackendInputError("declare-const arity")
            self.tables.consts[strip(e[1])] = strip(e[2])
            return False
        if head in ("define-fun", "define-fun-rec"):
            self._define_fun(e)
            return False
        if head == "assert":
            if len(e) != 2:
                raise BackendInputError("assert arity")
            name, body = self._peel_named(e[1])
            if name is None:
                name = f"u!{self.auto_names}"
                self.auto_names += 1
            self.asserts.append((name, body))
            return False
        if head == "check-sat":
            self._check_sat()
            return False
        if head == "get-model":
            if self.last_model is None:
                self._reply('(error "no model available")')
            else:
                self._reply(self.last_model)
            return False
        if head == "get-proof":
            if self.last_proof is None:
                self._reply('(error "no proof available")')
            else:
                self._reply(self.last_proof)
            return False
        if head == "get-info":
            if len(e) == 2 and strip(e[1]) == ":reason-unknown":
                self._reply(f'(:reason-unknown "{self.last_reason or "unknown"}")')
            else:
                self._reply("(:name refbackend)")
            return False
        if head in ("push", "pop", "reset"):
            raise BackendInputError(f"{head} is not supported")
        raise BackendInputError(f"unknown command {head!r}")

    def _peel_named(self, e):
        if isinstance(e, list) and len(e) >= 2 and e[0] == "!":
            name = None
            attrs = e[2:]
            for i, a in enumerate(attrs):
                if a == ":named" and i + 1 < len(attrs):
                    name = strip(attrs[i + 1])
            return name, e[1]
        return None, e

    def _declare_datatypes(self, e) -> None:
        if len(e) != 3 or not isinstance(e[1], list) or not isinstance(e[2], list):
            raise BackendInputError("declare-datatypes arity")
        names = []
        for decl in e[1]:
            if isinstance(decl, list) and len(decl) == 2:
                if strip(decl[1]) != "0":
                    raise BackendInputError("parametric datatypes are not supported")
                names.append(strip(decl[0]))
            else:
                raise BackendInputError("malformed sort declaration")
        if len(names) != len(e[2]):
            raise BackendInputError("sort and constructor list lengths differ")
        for name in names:
            self.tables.datatypes[name] = []
        for name, ctors in zip(names, e[2]):
            self._add_ctors(name, ctors)

    def _add_datatype(self, name: str, ctors) -> None:
        self.tables.datatypes[name] = []
        self._add_ctors(name, ctors)

    def _add_ctors(self, name: str, ctors) -> None:
        if not isinstance(ctors, list):
            raise BackendInputError("malformed constructor list")
        out = []
        for c in ctors:
            if isinstance(c, str):
                out.append((strip(c), []))
                continue
            if not c:
                raise BackendInputError("empty constructor")
            cname = strip(c[0])
            fields = []
            for f in c[1:]:
                if not (isinstance(f, list) and len(f) == 2):
                    raise BackendInputError("malformed selector")
                fields.append((strip(f[0]), strip(f[1])))
            out.append((cname, fields))
        self.tables.datatypes[name] = out

    def _define_fun(self, e) -> None:
        if len(e) != 5 or not isinstance(e[2], list):
            raise BackendInputError("define-fun arity")
        name = strip(e[1])
        params = []
        for p in e[2]:
            if not (isinstance(p, list) and len(p) == 2):
                raise BackendInputError("malformed parameter")
            params.append((strip(p[0]), strip(p[1])))
        ret = strip(e[3])
        # register the signature first so recursive bodies resolve
        self.tables.funs[name] = (params, ret, ("int", 0))
        scope = dict(params)
        body = read_term(e[4], scope, self.tables)
        self.tables.funs[name] = (params, ret, body)

    # -- solving ------------------------------------------------------

    def _is_horn(self) -> bool:
        if self.logic == "HORN":
            return True
        return any(
            isinstance(body, list) and body and body[0] == "forall"
            for _, body in self.asserts
        )

    def _check_sat(self) -> None:
        self.last_model = None
        self.last_proof = None
        self.last_reason = None
        try:
            if self._is_horn():
                self._check_horn()
            else:
                self._check_smt()
        except (BackendInputError, SmtParseError, KeyError, RecursionError) as exc:
            self.last_reason = str(exc)
            self._reply("unknown")

    def _check_horn(self) -> None:
        clauses = [
            horn.clause_from_assert(body, self.tables, name)
            for name, body in self.asserts
        ]
        engine = horn.HornEngine(clauses, self.tables)
        verdict, artifact = engine.check()
        if verdict == "sat":
            self.last_model = artifact
        elif verdict == "unsat":
            self.last_proof = artifact
        else:
            self.last_reason = artifact
        self._reply(verdict)

    def _check_smt(self) -> None:
        formulas = [read_formula(body, {}, self.tables) for _, body in self.asserts]
        query = smtq.SmtQuery(formulas, self.tables, self.shape_cap)
        verdict, artifact = query.check()
        if verdict == "sat":
            lines = ["(model"]
            for name, sort in self.tables.consts.items():
                val = artifact.get(name, 0 if sort == "Int" else None)
                if val is None:
                    continue
                lines.append(
                    f"  (define-fun {name} () {sort} {_format_value(val, sort)})"
                )
            lines.append(")")
            self.last_model = "\n".join(lines)
        elif verdict == "unknown":
            self.last_reason = artifact
        self._reply(verdict)


def main(argv=None) -> int:
    import argparse

    ap = argparse.ArgumentParser(prog="refbackend", add_help=True)
    ap.add_argument("file", nargs="?", help="script to run instead of stdin")
    ap.add_argument(
        "--shape-cap",
        type=int,
        default=smtq.DEFAULT_SHAPE_CAP,
        help="constructor-node budget for model enumeration",
    )
    args = ap.parse_args(argv)
    engine = Engine(shape_cap=args.shape_cap)
    if args.file:
        with open(args.file, "r", encoding="utf-8") as fh:
            engine.run(fh)
    else:
        engine.run(sys.stdin)
    return 0
