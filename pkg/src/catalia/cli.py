"""Command line front end.

Reads one SMT-LIB2 clause file, runs the solver, and prints the verdict
on the first line of output: sat, unsat, or unknown.  Exit status is 0
for a conclusive answer, 2 for unknown, 1 for errors.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from typing import List, Optional

from .abstraction import format_concrete_model
from .backend import BackendConfig, build_query_script, default_command
from .counterexample import Counterexample
from .driver import SolveConfig, solve
from .smtlib import format_constraint, parse_system
from .synthesis import SynthesisConfig
from .terms import CataliaError, ChcSystem


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="catalia",
        description="Satisfiability of constrained Horn clauses over "
        "algebraic data types and linear integer arithmetic.",
    )
    p.add_argument("file", help="input problem in SMT-LIB2 (HORN) format")
    p.add_argument(
        "--timeout", type=float, default=None, metavar="SECONDS",
        help="wall clock budget for the whole run",
    )
    p.add_argument(
        "--backend", default=None, metavar="CMD",
        help="solver command to spawn (default: the CATALIA_BACKEND "
        "environment variable, else the bundled reference backend)",
    )
    p.add_argument(
        "--backend-args", default=None, metavar="ARGS",
        help="extra arguments appended to the backend command",
    )
    p.add_argument(
        "--default-test-timeout", type=float, default=1.0, metavar="SECONDS",
        help="per query budget for bounded candidate tests during synthesis",
    )
    p.add_argument(
        "--ladder-cap", type=int, default=6, metavar="N",
        help="highest template degree tried before giving up",
    )
    p.add_argument(
        "--samples", type=int, default=500, metavar="N",
        help="ground instances sampled when validating a model",
    )
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument(
        "--internal-bmc-depth", type=int, default=6, metavar="N",
        help="unfolding depth for the built-in refutation fallback "
        "(0 disables it)",
    )
    p.add_argument(
        "--no-augment", action="store_true",
        help="skip the admissibility side conditions (for ablation runs; "
        "expect spurious refutation loops on some inputs)",
    )
    p.add_argument(
        "--print-model", action="store_true",
        help="after a sat verdict, print the fold and predicate definitions",
    )
    p.add_argument(
        "--print-proof", action="store_true",
        help="after an unsat verdict, print the replayed counterexample",
    )
    p.add_argument(
        "--dump-cex", default=None, metavar="PATH",
        help="after an unsat verdict, write the counterexample constraint "
        "as a standalone SMT-LIB2 query",
    )
    p.add_argument(
        "--transcripts", default=None, metavar="DIR",
        help="directory for backend transcripts",
    )
    p.add_argument(
        "--transcript-mode", choices=("record", "replay"), default="record",
        help="record live backend replies, or replay previously recorded "
        "ones without spawning a process (requires --transcripts)",
    )
    p.add_argument(
        "--verbose", "-v", action="store_true",
        help="print the refinement log to stderr",
    )
    return p


def _backend_config(args: argparse.Namespace) -> BackendConfig:
    if args.backend is not None:
        command = tuple(shlex.split(args.backend))
    else:
        command = default_command()
    if args.backend_args:
        command = command + tuple(shlex.split(args.backend_args))
    mode = "live"
    if args.transcripts is not None:
        mode = args.transcript_mode
    return BackendConfig(
        command=command,
        transcript_dir=args.transcripts,
        mode=mode,
    )


def _dump_cex(path: str, cex: Counterexample, system: ChcSystem) -> None:
    script = build_query_script(system, dict(cex.vars), [cex.constraint])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(script)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    config = SolveConfig(
        backend=_backend_config(args),
        timeout=args.timeout,
        samples=args.samples,
        seed=args.seed,
        ladder_cap=args.ladder_cap,
        augment=not args.no_augment,
        synthesis=SynthesisConfig(
            default_test_timeout=args.default_test_timeout
        ),
        unfold_fallback=args.internal_bmc_depth > 0,
        unfold_depth=args.internal_bmc_depth,
    )
    try:
        system = parse_system(text)
        result = solve(system, config)
    except CataliaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(result.status)
    if args.verbose:
        for line in result.log:
            print(f"; {line}", file=sys.stderr)
    if result.status == "sat" and args.print_model and result.model is not None:
        print(format_concrete_model(result.model, system))
    if result.status == "unsat" and result.counterexample is not None:
        if args.print_proof:
            cex = result.counterexample
            trail = " ".join(st.clause for st in cex.steps)
            print(f"; derivation: {cex.goal} <- {trail}" if trail
                  else f"; derivation: {cex.goal}")
            for name, sort in sorted(cex.vars.items()):
                print(f"; {name} : {sort}")
            print(f"; {format_constraint(cex.constraint)}")
        if args.dump_cex is not None:
            _dump_cex(args.dump_cex, result.counterexample, system)
    if result.status == "unknown":
        if result.reason:
            print(f"; {result.reason}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
