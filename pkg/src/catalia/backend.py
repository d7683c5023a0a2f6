"""Client for the solver process behind the wire.

All reasoning that needs a decision procedure funnels through here: the
clause-level check of the abstracted system, the quantifier-free side
queries (counterexample feasibility, candidate tests, parameter search),
and a bounded clause unfolder used to cross-check refutations.

The solver is any executable speaking the SMT-LIB2 subset this module
emits.  By default it is the bundled reference backend, spawned as
``python -m catalia.refbackend``; the CATALIA_BACKEND environment
variable or an explicit :class:`BackendConfig` substitutes another
command line.  Every query runs in a fresh process and is killed one
second past its deadline.

Sessions can be recorded to a transcript directory (one file per query,
keyed by script hash) and replayed later without any solver present.
"""

from __future__ import annotations

import hashlib
import os
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .abstraction import AbstractModel
from .smtlib import (
    Sexp,
    SmtParseError,
    SystemParser,
    format_constraint,
    format_datatypes,
    parse_ground_value,
    parse_sexps,
    print_system,
    sexp_to_str,
    strip_bars,
)
from .terms import (
    INT,
    CataliaError,
    ChcSystem,
    Clause,
    Cmp,
    Constraint,
    Sort,
    Value,
    Var,
    conj,
    rename_clause,
)


class BackendError(CataliaError):
    """The solver process misbehaved or its reply was unusable."""


_UNSET = object()


def default_command() -> Tuple[str, ...]:
    env = os.environ.get("CATALIA_BACKEND")
    if env:
        return tuple(shlex.split(env))
    return (sys.executable, "-m", "catalia.refbackend")


@dataclass
class BackendConfig:
    """How to reach the solver and how long to wait for it."""

    command: Tuple[str, ...] = field(default_factory=default_command)
    default_timeout: Optional[float] = None
    transcript_dir: Optional[str] = None
    mode: str = "live"  # live | record | replay

    def __post_init__(self) -> None:
        if self.mode not in ("live", "record", "replay"):
            raise BackendError(f"unknown backend mode {self.mode!r}")
        if self.mode in ("record", "replay") and not self.transcript_dir:
            raise BackendError(f"mode {self.mode!r} needs a transcript directory")


@dataclass
class RawReply:
    status: str  # sat | unsat | unknown | timeout | error
    responses: List[Sexp]
    reason: Optional[str] = None


def _script_key(script: str) -> str:
    normalized = "\n".join(
        line.rstrip() for line in script.replace("\r", "").split("\n")
    ).strip()
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def run_script(
    script: str, config: BackendConfig, timeout: object = _UNSET
) -> RawReply:
    """Feed one script to a fresh solver process and parse its output.

    The script must end with commands that make the process exit; the
    standard shape is check-sat, the get-* follow-ups, then exit.
    """
    if timeout is _UNSET:
        timeout = config.default_timeout
    if config.mode == "replay":
        path = Path(config.transcript_dir) / f"{_script_key(script)}.out"
        if not path.exists():
            raise BackendError(f"no recorded reply for this query ({path.name})")
        return _parse_reply(path.read_text(encoding="utf-8"))
    limit = None if timeout is None else float(timeout) + 1.0
    try:
        proc = subprocess.run(
            list(config.command),
            input=script,
            capture_output=True,
            text=True,
            timeout=limit,
        )
    except subprocess.TimeoutExpired:
        return RawReply("timeout", [], f"no reply within {timeout}s")
    except OSError as exc:
        raise BackendError(f"could not start backend {config.command!r}: {exc}") from exc
    if config.mode == "record":
        directory = Path(config.transcript_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{_script_key(script)}.out").write_text(
            proc.stdout, encoding="utf-8"
        )
    reply = _parse_reply(proc.stdout)
    if reply.status == "error" and proc.returncode not in (0, None):
        reply.reason = (reply.reason or "") + f" (exit code {proc.returncode})"
    return reply


def _parse_reply(stdout: str) -> RawReply:
    try:
        exps = parse_sexps(stdout)
    except SmtParseError as exc:
        return RawReply("error", [], f"unparseable solver output: {exc}")
    verdict = None
    responses: List[Sexp] = []
    pre_errors: List[str] = []
    for e in exps:
        if verdict is None:
            if isinstance(e, str) and e in ("sat", "unsat", "unknown"):
                verdict = e
            elif isinstance(e, list) and e and e[0] == "error":
                pre_errors.append(sexp_to_str(e))
        else:
            responses.append(e)
    if verdict is None:
        reason = "; ".join(pre_errors) if pre_errors else "no verdict in solver output"
        return RawReply("error", [], reason)
    return RawReply(verdict, responses)


# ======================================================================
# Clause-level queries
# ======================================================================

@dataclass
class ProofStep:
    clause: str
    atom: int


@dataclass
class ProofOutline:
    """A refutation as the wire carries it: the goal clause that started
    the derivation and the clauses resolved against, in order."""

    goal: str
    steps: Tuple[ProofStep, ...]


@dataclass
class ChcResult:
    status: str  # sat | unsat | unknown
    model: Optional[AbstractModel] = None
    proof: Optional[ProofOutline] = None
    reason: Optional[str] = None


def chc_check_sat(
    system: ChcSystem, config: BackendConfig, timeout: object = _UNSET
) -> ChcResult:
    """Decide the (integer) clause system, returning a model or a proof."""
    script = (
        print_system(system, named=True, check_sat=True)
        + "(get-model)\n(get-proof)\n(get-info :reason-unknown)\n(exit)\n"
    )
    reply = run_script(script, config, timeout)
    if reply.status == "sat":
        model = _find_model(reply.responses)
        if model is None:
            return ChcResult("unknown", reason="sat verdict without a model")
        try:
            return ChcResult("sat", model=parse_abstract_model(model, system))
        except (SmtParseError, BackendError) as exc:
            return ChcResult("unknown", reason=f"unusable model: {exc}")
    if reply.status == "unsat":
        proof_exp = _find_tagged(reply.responses, "proof")
        if proof_exp is None:
            return ChcResult("unknown", reason="unsat verdict without a proof")
        try:
            return ChcResult("unsat", proof=parse_proof(proof_exp, system))
        except BackendError as exc:
            return ChcResult("unknown", reason=f"unusable proof: {exc}")
    reason = reply.reason or _find_reason(reply.responses) or reply.status
    return ChcResult("unknown", reason=reason)


def _find_model(responses: Sequence[Sexp]) -> Optional[Sexp]:
    for e in responses:
        if isinstance(e, list) and e and e[0] == "model":
            return e
        # some solvers answer get-model with a bare list of define-funs
        if (
            isinstance(e, list)
            and e
            and isinstance(e[0], list)
            and e[0]
            and e[0][0] == "define-fun"
        ):
            return ["model"] + e
    return None


def _find_tagged(responses: Sequence[Sexp], tag: str) -> Optional[Sexp]:
    for e in responses:
        if isinstance(e, list) and e and e[0] == tag:
            return e
    return None


def _find_reason(responses: Sequence[Sexp]) -> Optional[str]:
    for e in responses:
        if isinstance(e, list) and len(e) == 2 and e[0] == ":reason-unknown":
            return strip_bars(str(e[1])).strip('"')
    return None


def parse_abstract_model(model_exp: Sexp, system: ChcSystem) -> AbstractModel:
    """Read a (model (define-fun P ((a Int) ...) Bool body) ...) reply."""
    parser = SystemParser()
    parser.system = system
    interps: Dict[str, Tuple[Tuple[Var, ...], Constraint]] = {}
    for entry in model_exp[1:]:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            continue
        name = strip_bars(entry[1])
        if name not in system.predicates:
            continue
        params = []
        scope: Dict[str, Sort] = {}
        for b in entry[2]:
            if not (isinstance(b, list) and len(b) == 2):
                raise BackendError(f"malformed model binder in {name}")
            pname = strip_bars(b[0])
            params.append(Var(pname, INT))
            scope[pname] = INT
        if len(params) != len(system.predicates[name]):
            raise BackendError(f"model arity mismatch for {name}")
        try:
            body = parser.parse_constraint(entry[4], scope)
        except SmtParseError as exc:
            raise BackendError(f"unparseable model body for {name}: {exc}") from exc
        interps[name] = (tuple(params), body)
    for pred in system.predicates:
        if pred not in interps:
            raise BackendError(f"model omits predicate {pred}")
    return AbstractModel(interps)


def parse_proof(proof_exp: Sexp, system: ChcSystem) -> ProofOutline:
    """Read a (proof (sld (goal g) (step (clause c) (atom k)) ...)) reply.

    A step resolving several atoms at once, written (atoms k1 k2 ...), is
    accepted only in its single-index form; leftmost-first derivations
    never need more.
    """
    if not (isinstance(proof_exp, list) and len(proof_exp) == 2):
        raise BackendError("proof reply is not a single derivation")
    sld = proof_exp[1]
    if not (isinstance(sld, list) and sld and sld[0] == "sld"):
        raise BackendError("unknown proof format")
    goal: Optional[str] = None
    steps: List[ProofStep] = []
    known = {cl.name for cl in system.clauses}
    for part in sld[1:]:
        if not isinstance(part, list) or not part:
            raise BackendError(f"malformed proof part {sexp_to_str(part)}")
        if part[0] == "goal":
            if goal is not None or len(part) != 2:
                raise BackendError("malformed goal step")
            goal = strip_bars(part[1])
        elif part[0] == "step":
            clause_name = None
            atom_idx = 0
            for item in part[1:]:
                if not (isinstance(item, list) and len(item) >= 2):
                    raise BackendError(f"malformed step item {sexp_to_str(item)}")
                if item[0] == "clause":
                    clause_name = strip_bars(item[1])
                elif item[0] == "atom":
                    atom_idx = int(item[1])
                elif item[0] == "atoms":
                    if len(item) != 2:
                        raise BackendError("multi-atom proof steps are not supported")
                    atom_idx = int(item[1])
            if clause_name is None:
                raise BackendError("proof step without a clause")
            steps.append(ProofStep(clause_name, atom_idx))
        else:
            raise BackendError(f"unknown proof part {part[0]!r}")
    if goal is None:
        raise BackendError("proof without a goal clause")
    if goal not in known:
        raise BackendError(f"proof goal {goal!r} is not a clause of the system")
    for s in steps:
        if s.clause not in known:
            raise BackendError(f"proof step uses unknown clause {s.clause!r}")
    return ProofOutline(goal, tuple(steps))


# ======================================================================
# Quantifier-free side queries
# ======================================================================

@dataclass
class SmtResult:
    status: str  # sat | unsat | unknown | timeout | error
    model: Optional[Dict[str, Value]] = None
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


def build_query_script(
    system: ChcSystem,
    consts: Dict[str, Sort],
    asserts: Sequence[Constraint],
    fold_defs: str = "",
    logic: Optional[str] = None,
) -> str:
    lines: List[str] = []
    if logic:
        lines.append(f"(set-logic {logic})")
    dts = format_datatypes(system)
    if dts:
        lines.append(dts)
    for name, sort in consts.items():
        lines.append(f"(declare-const {name} {sort.name})")
    if fold_defs:
        lines.append(fold_defs)
    for c in asserts:
        lines.append(f"(assert {format_constraint(c)})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


def smt_check_sat(
    system: ChcSystem,
    consts: Dict[str, Sort],
    asserts: Sequence[Constraint],
    config: BackendConfig,
    fold_defs: str = "",
    logic: Optional[str] = None,
    timeout: object = _UNSET,
) -> SmtResult:
    """Satisfiability of a conjunction over typed constants.

    On sat, the model maps every constant to a ground value.
    """
    script = build_query_script(system, consts, asserts, fold_defs, logic)
    reply = run_script(script, config, timeout)
    if reply.status == "sat":
        model_exp = _find_model(reply.responses)
        if model_exp is None:
            return SmtResult("unknown", reason="sat verdict without a model")
        try:
            values = _parse_value_model(model_exp, consts, system)
        except SmtParseError as exc:
            return SmtResult("unknown", reason=f"unusable model: {exc}")
        return SmtResult("sat", model=values)
    if reply.status == "unsat":
        return SmtResult("unsat")
    return SmtResult(reply.status, reason=reply.reason)


def _parse_value_model(
    model_exp: Sexp, consts: Dict[str, Sort], system: ChcSystem
) -> Dict[str, Value]:
    values: Dict[str, Value] = {}
    for entry in model_exp[1:]:
        if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
            continue
        name = strip_bars(entry[1])
        if name not in consts or entry[2] != []:
            continue
        values[name] = parse_ground_value(entry[4], consts[name], system)
    for name, sort in consts.items():
        if name not in values:
            # an unconstrained constant; any value will do
            values[name] = 0 if sort.is_int else _default_value(sort, system)
    return values


def _default_value(sort: Sort, system: ChcSystem):
    from .terms import App

    dt = system.datatype_of(sort)
    for ctor in dt.constructors:
        if all(fs.is_int for _, fs in ctor.fields):
            from .terms import IntVal

            return App(ctor.name, tuple(IntVal(0) for _ in ctor.fields), sort)
    ctor = dt.constructors[0]
    from .terms import IntVal

    args = tuple(
        IntVal(0) if fs.is_int else _default_value(fs, system)
        for _, fs in ctor.fields
    )
    return App(ctor.name, args, sort)


# ======================================================================
# Bounded unfolding cross-check
# ======================================================================

def internal_unfold_unsat(
    system: ChcSystem,
    config: BackendConfig,
    max_depth: int = 6,
    max_states: int = 400,
    timeout: object = _UNSET,
) -> Optional[ProofOutline]:
    """Search for a refutation by unfolding clauses breadth-first.

    Independent of the solver's own proof search; the solver is only
    consulted to discard infeasible branches.  Returns an outline in the
    same shape the wire uses, or None when the bounded search finds
    nothing.
    """
    goal_clauses = [cl for cl in system.clauses if cl.head is None]
    by_head: Dict[str, List[Clause]] = {}
    for cl in system.clauses:
        if cl.head is not None:
            by_head.setdefault(cl.head.pred, []).append(cl)

    def feasible(constraints: List[Constraint], vars: Dict[str, Sort]) -> bool:
        res = smt_check_sat(
            system, vars, [conj(constraints)], config, timeout=timeout
        )
        return not res.is_unsat

    frontier = []
    for cl in goal_clauses:
        inst, _ = rename_clause(cl, "!0")
        vars = {v.name: v.sort for v in inst.vars}
        state = (
            list(inst.body),
            [inst.constraint],
            vars,
            ProofOutline(cl.name, ()),
        )
        if feasible(state[1], vars):
            frontier.append(state)
    explored = 0
    while frontier:
        next_frontier = []
        for atoms, constraints, vars, outline in frontier:
            if not atoms:
                return outline
            if len(outline.steps) >= max_depth:
                continue
            first = atoms[0]
            for cl in by_head.get(first.pred, []):
                inst, _ = rename_clause(cl, f"!{len(outline.steps) + 1}")
                new_vars = dict(vars)
                for v in inst.vars:
                    new_vars[v.name] = v.sort
                assert inst.head is not None
                eqs: List[Constraint] = [
                    Cmp("=", ha, ga)
                    for ha, ga in zip(inst.head.args, first.args)
                ]
                new_constraints = constraints + [inst.constraint] + eqs
                if not feasible(new_constraints, new_vars):
                    continue
                explored += 1
                if explored > max_states:
                    return None
                next_frontier.append(
                    (
                        list(inst.body) + atoms[1:],
                        new_constraints,
                        new_vars,
                        ProofOutline(
                            outline.goal,
                            outline.steps + (ProofStep(cl.name, 0),),
                        ),
                    )
                )
        frontier = next_frontier
    return None
