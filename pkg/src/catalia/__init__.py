"""Catalia: CHC satisfiability over algebraic data types.

Proves satisfiability by abstracting ADT arguments to integer tuples
through automatically synthesized catamorphisms (CEGAR over a template
ladder, CEGIS inside each template), and unsatisfiability by replaying
abstract refutations against the original clauses.

Typical use:

    from catalia import parse_system, solve, SolveConfig
    system = parse_system(open("problem.smt2").read())
    result = solve(system, SolveConfig())
    print(result.status)
"""

from .terms import (
    CataliaError,
    ChcSystem,
    Clause,
    SortError,
    UnsupportedFeature,
    check_sorts,
)
from .smtlib import parse_system, print_system
from .catamorphism import (
    Catamorphism,
    TemplateCatamorphism,
    default_catamorphism,
    eval_ground,
    instantiate,
    linear_template,
    template_ladder,
)
from .preprocess import preprocess
from .abstraction import abstract_system, concretize_model
from .driver import SolveConfig, SolveResult, solve, benchmark_run

__version__ = "0.1.0"

__all__ = [
    "CataliaError",
    "ChcSystem",
    "Clause",
    "SortError",
    "UnsupportedFeature",
    "check_sorts",
    "parse_system",
    "print_system",
    "Catamorphism",
    "TemplateCatamorphism",
    "default_catamorphism",
    "eval_ground",
    "instantiate",
    "linear_template",
    "template_ladder",
    "preprocess",
    "abstract_system",
    "concretize_model",
    "SolveConfig",
    "SolveResult",
    "solve",
    "benchmark_run",
    "__version__",
]
