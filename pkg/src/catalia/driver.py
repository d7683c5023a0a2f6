"""The refinement loop tying everything together.

One round trip: abstract the (preprocessed) system through the current
fold, hand the integer clauses to the solver, and act on the verdict.
A model is concretized and spot-checked on random ground instances.  A
refutation is replayed on the datatype side; if its formula is
satisfiable the input really is unsatisfiable, otherwise the formula
becomes an obligation and the parameter search proposes a new fold.
When a template's parameter space is exhausted the next rung of the
template ladder takes over; obligations carry across rungs, learned
parameter constraints do not.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .abstraction import (
    ConcreteModel,
    abstract_system,
    assert_adt_free,
    check_model_on_ground_instances,
    concretize_model,
)
from .backend import (
    BackendConfig,
    ChcResult,
    chc_check_sat,
    internal_unfold_unsat,
)
from .catamorphism import (
    Catamorphism,
    default_catamorphism,
    template_ladder,
)
from .counterexample import Counterexample, feasibility, replay_proof, simplify
from .preprocess import PreprocessReport, preprocess
from .synthesis import SynthesisConfig, synthesize
from .terms import CataliaError, ChcSystem, Constraint, check_sorts

DEFAULT_LADDER_CAP = 6
DEFAULT_SAMPLES = 500


@dataclass
class SolveConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    timeout: Optional[float] = None
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    ladder_cap: int = DEFAULT_LADDER_CAP
    augment: bool = True
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    feasibility_unknown_cap: int = 3
    repeat_cap: int = 2
    unfold_fallback: bool = True
    unfold_depth: int = 6


@dataclass
class SolveStats:
    chc_calls: int = 0
    templates_tried: int = 0
    refinements: int = 0
    obligations: int = 0
    elapsed: float = 0.0


@dataclass
class SolveResult:
    status: str  # sat | unsat | unknown
    model: Optional[ConcreteModel] = None
    counterexample: Optional[Counterexample] = None
    cata: Optional[Catamorphism] = None
    reason: Optional[str] = None
    report: Optional[PreprocessReport] = None
    stats: SolveStats = field(default_factory=SolveStats)
    log: List[str] = field(default_factory=list)


class _Timeout(Exception):
    pass


class _Clock:
    def __init__(self, budget: Optional[float]):
        self.start = time.monotonic()
        self.budget = budget

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def remaining(self) -> Optional[float]:
        if self.budget is None:
            return None
        left = self.budget - self.elapsed()
        if left <= 0:
            raise _Timeout()
        return left


def solve(system: ChcSystem, config: Optional[SolveConfig] = None) -> SolveResult:
    """Decide the clause system; sat and unsat verdicts come with evidence."""
    if config is None:
        config = SolveConfig()
    clock = _Clock(config.timeout)
    stats = SolveStats()
    log: List[str] = []
    try:
        return _solve(system, config, clock, stats, log)
    except _Timeout:
        stats.elapsed = clock.elapsed()
        log.append(f"gave up after {stats.elapsed:.1f}s")
        return SolveResult("unknown", reason="timeout", stats=stats, log=log)


def _solve(
    system: ChcSystem,
    config: SolveConfig,
    clock: _Clock,
    stats: SolveStats,
    log: List[str],
) -> SolveResult:
    check_sorts(system)
    pre, report = preprocess(system, augment=config.augment)
    cata = default_catamorphism(pre)
    obligations: List[Counterexample] = []
    seen_keys: Dict[str, int] = {}
    feas_unknowns = 0
    pending_spurious = False

    def finish(status: str, **kw) -> SolveResult:
        stats.elapsed = clock.elapsed()
        return SolveResult(status, report=report, stats=stats, log=log, **kw)

    def attempt(current: Catamorphism):
        """One abstraction round; returns a SolveResult or a spurious
        counterexample to learn from."""
        nonlocal feas_unknowns
        env = abstract_system(pre, current)
        assert_adt_free(env.abstract)
        stats.chc_calls += 1
        res = chc_check_sat(env.abstract, config.backend, timeout=clock.remaining())
        if res.status == "unknown" and config.unfold_fallback:
            outline = internal_unfold_unsat(
                env.abstract,
                config.backend,
                max_depth=config.unfold_depth,
                timeout=clock.remaining(),
            )
            if outline is not None:
                log.append("clause solver was inconclusive; bounded unfolding found a refutation")
                res = ChcResult("unsat", proof=outline)
        if res.status == "sat":
            assert res.model is not None
            model = concretize_model(res.model, env)
            violations = check_model_on_ground_instances(
                model, pre, samples=config.samples, seed=config.seed
            )
            if violations:
                log.append(
                    f"model failed {len(violations)} of {config.samples} ground spot checks"
                )
                return finish(
                    "unknown",
                    reason="solver model failed ground validation",
                    cata=current,
                )
            return finish("sat", model=model, cata=current)
        if res.status == "unsat":
            assert res.proof is not None
            cex = replay_proof(res.proof, env)
            theta = simplify(cex)
            feas = feasibility(theta, pre, config.backend, timeout=clock.remaining())
            if feas.is_sat:
                return finish("unsat", counterexample=theta, cata=current)
            if not feas.is_unsat:
                feas_unknowns += 1
                log.append(
                    f"feasibility inconclusive ({feas.status}); treating the "
                    f"derivation as spurious ({feas_unknowns}/{config.feasibility_unknown_cap})"
                )
                if feas_unknowns > config.feasibility_unknown_cap:
                    return finish(
                        "unknown",
                        reason="too many inconclusive feasibility checks",
                        cata=current,
                    )
            return theta
        return finish(
            "unknown",
            reason=res.reason or "clause solver was inconclusive",
            cata=current,
        )

    # Round zero: the default fold alone often suffices.
    outcome = attempt(cata)
    if isinstance(outcome, SolveResult):
        return outcome
    _record_obligation(outcome, obligations, seen_keys, log)
    stats.obligations = len(obligations)
    pending_spurious = True

    for template in template_ladder(pre, cap=config.ladder_cap):
        stats.templates_tried += 1
        log.append(f"trying template {template.label}")
        learned: List[Constraint] = []
        repeats = 0
        while True:
            clock.remaining()
            if not pending_spurious:
                outcome = attempt(cata)
                if isinstance(outcome, SolveResult):
                    return outcome
                if not _record_obligation(outcome, obligations, seen_keys, log):
                    repeats += 1
                    if repeats >= config.repeat_cap:
                        log.append(
                            "the same spurious derivation keeps coming back; "
                            "moving to the next template"
                        )
                        pending_spurious = True
                        break
                stats.obligations = len(obligations)
            pending_spurious = False
            synth = synthesize(
                obligations,
                template,
                pre,
                config.backend,
                config.synthesis,
                learned=learned,
            )
            log.extend(f"  {line}" for line in synth.log)
            if synth.status != "found":
                log.append(f"template {template.label} exhausted")
                pending_spurious = True
                break
            stats.refinements += 1
            assert synth.cata is not None
            cata = synth.cata
    return finish(
        "unknown",
        reason="template ladder exhausted without a conclusive abstraction",
        cata=cata,
    )


def _record_obligation(
    theta: Counterexample,
    obligations: List[Counterexample],
    seen: Dict[str, int],
    log: List[str],
) -> bool:
    """Add a new obligation; False if this formula was seen before."""
    key = theta.key()
    if key in seen:
        seen[key] += 1
        log.append(
            f"spurious derivation seen again ({seen[key]}x); the current "
            "fold cannot distinguish it"
        )
        return False
    seen[key] = 1
    obligations.append(theta)
    return True


def solve_file(path: str, config: Optional[SolveConfig] = None) -> SolveResult:
    from .smtlib import parse_system

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return solve(parse_system(text), config)


@dataclass
class BenchmarkRow:
    name: str
    status: str
    expected: Optional[str]
    elapsed: float
    ok: bool


def benchmark_run(
    paths, config: Optional[SolveConfig] = None
) -> List[BenchmarkRow]:
    """Solve a list of .smt2 files, checking .expected sidecars when present."""
    import os

    rows: List[BenchmarkRow] = []
    for path in paths:
        name = os.path.basename(path)
        expected = None
        sidecar = os.path.splitext(path)[0] + ".expected"
        if os.path.exists(sidecar):
            with open(sidecar, "r", encoding="utf-8") as fh:
                expected = fh.read().strip() or None
        t0 = time.monotonic()
        try:
            res = solve_file(path, config)
            status = res.status
        except CataliaError as exc:
            status = f"error: {exc}"
        elapsed = time.monotonic() - t0
        ok = expected is None or status == expected
        rows.append(BenchmarkRow(name, status, expected, elapsed, ok))
    return rows
