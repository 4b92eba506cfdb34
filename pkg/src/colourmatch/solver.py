"""Strategy dispatch over the pipelines and the baseline solvers."""

from __future__ import annotations

import logging

from .buckets import solve_small
from .core import DemandSequence, Instance, SolveResult, Solution, verify_solution
from .errors import InvalidInputError, InvariantViolation
from .numeric import real_power
from .oracle import DEFAULT_CAP, exact_colourful_matching, exact_search, fallback_solve, \
    greedy_colourful_matching, local_search_improve
from .reduction import solve_large

log = logging.getLogger(__name__)

STRATEGIES = ("auto", "small", "large", "greedy", "local", "exact")


def classify_regime(dem: DemandSequence, n: int) -> str:
    """``small`` if every demand is at most n^(1-eps), ``large`` if every
    demand is at least n^eps, else ``mixed``."""
    eps = dem.epsilon
    if max(dem) <= real_power(n, 1 - eps):
        return "small"
    if min(dem) >= real_power(n, eps):
        return "large"
    return "mixed"


def _check_inputs(inst: Instance, dem):
    if not isinstance(dem, DemandSequence):
        dem = DemandSequence(dem)
    if dem.k > inst.ell:
        raise InvalidInputError(f"{dem.k} demands but only {inst.ell} matchings")
    if dem.total > inst.n:
        raise InvalidInputError(f"total demand {dem.total} exceeds n={inst.n}")
    return dem


def _run(inst, dem, strategy, seed, fallback, cap) -> SolveResult:
    if strategy == "auto":
        regime = classify_regime(dem, inst.n)
        if regime == "mixed":
            log.warning("mixed demand regime: using the fallback chain")
            res = fallback_solve(inst, list(dem), seed=seed, cap=cap) if fallback else \
                SolveResult("no-solution", tier="none")
            res.log.insert(0, "mixed regime; no pipeline applies")
            return res
        strategy = regime
    if strategy == "small":
        return solve_small(inst, dem, seed=seed, fallback=fallback, cap=cap)
    if strategy == "large":
        return solve_large(inst, dem, seed=seed, fallback=fallback, cap=cap)
    ds = list(dem)
    if strategy == "greedy":
        sol = greedy_colourful_matching(inst, ds)
        return SolveResult("feasible", sol, "greedy", dem.k) if sol else SolveResult("no-solution", tier="greedy")
    if strategy == "local":
        return fallback_solve(inst, ds, seed=seed, cap=0)
    if strategy == "exact":
        sol = exact_search(inst, ds, cap=cap)
        return SolveResult("feasible", sol, "exact", dem.k) if sol else SolveResult("infeasible", tier="exact")
    raise InvalidInputError(f"unknown strategy {strategy!r}")


def solve(inst: Instance, dem, strategy: str = "auto", seed: int = 0, fallback: bool = True,
          chosen=None, cap: int = DEFAULT_CAP) -> SolveResult:
    """Solve and verify.  Every feasible result has passed verify_solution.

    With ``chosen`` demand i must be met by matching ``chosen[i]``.  The
    pipelines then run on those matchings only.  Their answer is rescored
    against the fixed assignment, with the fixed-assignment fallback behind.
    """
    dem = _check_inputs(inst, dem)
    ds = list(dem)
    if chosen is not None:
        chosen = list(chosen)
        if len(chosen) != dem.k or len(set(chosen)) != dem.k:
            raise InvalidInputError("chosen must list one distinct matching per demand")
        sub = inst.sub(chosen)
        res = _run(sub, dem, strategy, seed, fallback, cap)
        if res.feasible:
            fixed = Solution.from_edges(inst, res.solution.edges, chosen)
            if not verify_solution(inst, ds, fixed):
                res.solution = fixed
                return res
            res.log.append("answer used another matching order; retrying with the fixed order")
            start = fixed
            sol = local_search_improve(inst, ds, start, budget=20000, seed=seed)
            if not verify_solution(inst, ds, sol):
                return SolveResult("feasible", sol, res.tier + "+local", res.ell_used, res.log)
        if not fallback or strategy in ("greedy", "exact"):
            if strategy == "exact":
                sol = exact_colourful_matching(inst, ds, chosen, cap=cap)
                return SolveResult("feasible", sol, "exact", dem.k) if sol else SolveResult("infeasible", tier="exact")
            return res if not res.feasible else SolveResult("no-solution", tier=res.tier, log=res.log)
        out = fallback_solve(inst, ds, seed=seed, cap=cap, chosen=chosen)
        out.log[:0] = res.log
        return out
    res = _run(inst, dem, strategy, seed, fallback, cap)
    if res.feasible:
        if res.solution is None or verify_solution(inst, ds, res.solution):
            raise InvariantViolation(f"strategy {strategy} returned an unverified solution")
    return res
