"""Seeded random generation of ground terms and clause instantiations.

Used by the ground model check after a Sat verdict and by the property
test suites.  All randomness flows through an explicit ``random.Random``
so runs are reproducible from a seed.
"""

from __future__ import annotations

import random
from typing import Dict, List, Tuple

from .terms import (
    App,
    ChcSystem,
    Clause,
    Constructor,
    IntVal,
    Sort,
    Term,
    Value,
)

#: Integer components of sampled ground instances stay in this range.
INT_SAMPLE_RANGE = (-16, 16)


def random_ground_term(
    rng: random.Random,
    system: ChcSystem,
    sort: Sort,
    max_size: int,
    int_range: Tuple[int, int] = INT_SAMPLE_RANGE,
) -> Term:
    """A random ground term of ``sort`` with at most ``max_size``
    constructor nodes."""
    if sort.is_int:
        return IntVal(rng.randint(*int_range))
    dt = system.datatype_of(sort)

    def recursive(ctor: Constructor) -> bool:
        return any(fs.is_adt for _, fs in ctor.fields)

    def gen(sname: str, budget: int) -> Term:
        dt = system.datatypes[sname]
        choices = [
            c for c in dt.constructors if budget > 1 or not recursive(c)
        ]
        if not choices:
            # Every constructor recurses; spend the last of the budget.
            choices = list(dt.constructors)
        ctor = rng.choice(choices)
        args: List[Term] = []
        for _, fs in ctor.fields:
            if fs.is_adt:
                args.append(gen(fs.name, max(1, budget - 1)))
            else:
                args.append(IntVal(rng.randint(*int_range)))
        return App(ctor.name, tuple(args), Sort(sname))

    return gen(dt.name, max(1, max_size))


def random_instantiation(
    rng: random.Random,
    system: ChcSystem,
    clause: Clause,
    max_term_size: int,
    int_range: Tuple[int, int] = INT_SAMPLE_RANGE,
) -> Dict[str, Value]:
    """Ground values for every variable of a clause."""
    env: Dict[str, Value] = {}
    for v in clause.vars:
        if v.sort.is_int:
            env[v.name] = rng.randint(*int_range)
        else:
            env[v.name] = random_ground_term(
                rng, system, v.sort, max_term_size, int_range
            )
    return env
