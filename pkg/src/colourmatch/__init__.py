"""Colourful matchings in families of disjoint perfect matchings.

Given disjoint perfect matchings M_1..M_l of the complete graph on 2n
vertices and demands a_1..a_k, find k of the matchings and one matching M
with |M ∩ M_i| >= a_i.
"""

__version__ = "0.1.0"

from .core import (DemandSequence, Instance, Solution, SolveResult, relabel_random,
                   round_robin_one_factorization, verify_instance, verify_solution)
from .errors import ColourMatchError
from .solver import classify_regime, solve

__all__ = [
    "ColourMatchError", "DemandSequence", "Instance", "Solution", "SolveResult",
    "classify_regime", "relabel_random", "round_robin_one_factorization", "solve",
    "verify_instance", "verify_solution",
]
