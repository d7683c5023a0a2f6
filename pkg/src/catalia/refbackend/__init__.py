"""A small reference SMT/CHC backend speaking SMT-LIB2 on stdin/stdout.

Bundled so the solver works out of the box in environments without an
external SMT solver; run as ``python -m catalia.refbackend``.  The
decision procedures are deliberately independent of the main package's
logic (only the low-level s-expression reader is shared) so that the two
sides of every cross-check remain separate implementations.
"""
