"""Baseline solvers: exhaustive search, greedy, and local search.

The exhaustive search is the only routine allowed to declare an instance
infeasible.  Greedy and local search either return a verified solution or
nothing.
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from .core import Edge, Instance, SolveResult, Solution, verify_solution
from .errors import InvalidInputError, InvariantViolation, SizeLimitError
from .numeric import derive_rng

DEFAULT_CAP = 16


def _demands(dem) -> list[int]:
    return [int(a) for a in dem]


def _check_chosen(inst: Instance, k: int, chosen: Sequence[int]):
    if len(chosen) != k:
        raise InvalidInputError(f"{len(chosen)} matchings chosen for {k} demands")
    if len(set(chosen)) != k or any(not 0 <= c < inst.ell for c in chosen):
        raise InvalidInputError(f"bad chosen indices {list(chosen)}")


# -- exhaustive -----------------------------------------------------------------


def exact_colourful_matching(inst: Instance, dem, chosen: Sequence[int], cap: int = DEFAULT_CAP):
    """Complete backtracking for a fixed assignment of matchings to demands.

    Looks for exactly ``a_i`` edges of ``M_{chosen[i]}``: any feasible matching
    contains such a sub-matching.  Branches on the lowest free vertex (leave it
    uncovered, or cover it by one of its chosen-colour edges).  Returns a
    Solution or None.
    """
    ds = _demands(dem)
    k = len(ds)
    _check_chosen(inst, k, chosen)
    n2 = inst.n2
    if n2 > cap:
        raise SizeLimitError(f"n2={n2} exceeds exact-search cap {cap}")
    skip0 = n2 - 2 * sum(ds)
    if skip0 < 0:
        return None
    partner = [[-1] * n2 for _ in range(k)]
    for c, idx in enumerate(chosen):
        for u, v in inst.matchings[idx]:
            partner[c][u] = v
            partner[c][v] = u
    full = (1 << n2) - 1
    failed: set = set()
    picked: list[tuple[Edge, int]] = []

    def viable(free: int, rem: list[int]) -> bool:
        for c in range(k):
            r = rem[c]
            if r == 0:
                continue
            avail = 0
            pc = partner[c]
            f = free
            while f:
                low = f & -f
                v = low.bit_length() - 1
                f ^= low
                w = pc[v]
                if w > v and (free >> w) & 1:
                    avail += 1
                    if avail >= r:
                        break
            if avail < r:
                return False
        return True

    def rec(free: int, rem: list[int], skip: int) -> bool:
        if not any(rem):
            return True
        key = (free, tuple(rem))
        if key in failed:
            return False
        if not viable(free, rem):
            failed.add(key)
            return False
        v = (free & -free).bit_length() - 1
        order = sorted((c for c in range(k) if rem[c] > 0), key=lambda c: (-rem[c], c))
        for c in order:
            w = partner[c][v]
            if w < 0 or not (free >> w) & 1:
                continue
            rem[c] -= 1
            picked.append((((v, w) if v < w else (w, v)), c))
            if rec(free & ~(1 << v) & ~(1 << w), rem, skip):
                return True
            picked.pop()
            rem[c] += 1
        if skip > 0 and rec(free & ~(1 << v), rem, skip - 1):
            return True
        failed.add(key)
        return False

    if not rec(full, list(ds), skip0):
        return None
    edges = [e for e, _ in picked]
    sol = Solution.from_edges(inst, edges, chosen)
    if verify_solution(inst, ds, sol):
        raise InvariantViolation("exact search produced an invalid solution")
    return sol


def assignments(ell: int, demands: Sequence[int]):
    """Injective maps demands -> matching indices, one per class of equal demands."""
    k = len(demands)
    seen = set()
    for perm in itertools.permutations(range(ell), k):
        key = frozenset(
            (a, frozenset(p for p, b in zip(perm, demands) if b == a)) for a in set(demands)
        )
        if key in seen:
            continue
        seen.add(key)
        yield perm


def exact_search(inst: Instance, dem, cap: int = DEFAULT_CAP):
    """Exhaustive over every choice of k matchings; None means infeasible."""
    ds = _demands(dem)
    if len(ds) > inst.ell:
        return None
    for perm in assignments(inst.ell, ds):
        sol = exact_colourful_matching(inst, ds, perm, cap=cap)
        if sol is not None:
            return sol
    return None


# -- greedy ---------------------------------------------------------------------


def _greedy_partial(inst: Instance, ds: list[int], chosen=None):
    """Greedy edge selection.  Returns (edges, chosen) even if short."""
    k = len(ds)
    n2 = inst.n2
    order = sorted(range(k), key=lambda i: (-ds[i], i))
    used = bytearray(n2)
    taken: set[int] = set()
    slots: list[int | None] = [None] * k if chosen is None else list(chosen)
    edges: list[Edge] = []
    for pos, i in enumerate(order):
        if slots[i] is None:
            best, best_free = None, -1
            for idx in range(inst.ell):
                if idx in taken:
                    continue
                free = sum(1 for u, v in inst.matchings[idx] if not used[u] and not used[v])
                if free > best_free:
                    best, best_free = idx, free
            if best is None:
                break
            slots[i] = best
        taken.add(slots[i])
        later = [slots[j] for j in order[pos + 1:] if slots[j] is not None]
        if chosen is None:
            later = [x for x in range(inst.ell) if x not in taken]
        # damage of an edge = free edges of later matchings it would block
        part = []
        for idx in later:
            p = [-1] * n2
            for u, v in inst.matchings[idx]:
                p[u] = v
                p[v] = u
            part.append(p)
        cands = []
        for u, v in inst.matchings[slots[i]]:
            if used[u] or used[v]:
                continue
            dmg = 0
            for p in part:
                for x in (u, v):
                    if not used[p[x]]:
                        dmg += 1
            cands.append((dmg, u, v))
        cands.sort()
        for dmg, u, v in cands[: ds[i]]:
            used[u] = used[v] = 1
            edges.append((u, v))
    if any(s is None for s in slots):
        return edges, None
    return edges, tuple(slots)


def greedy_colourful_matching(inst: Instance, dem, chosen=None):
    ds = _demands(dem)
    if len(ds) > inst.ell:
        return None
    edges, slots = _greedy_partial(inst, ds, chosen)
    if slots is None:
        return None
    sol = Solution.from_edges(inst, edges, slots)
    return sol if not verify_solution(inst, ds, sol) else None


# -- local search ---------------------------------------------------------------


def local_search_improve(inst: Instance, dem, partial: Solution, budget: int = 20000,
                         seed: int = 0, noise: float = 0.2) -> Solution:
    """WalkSAT-style repair of a short solution.

    Each step picks a deficient colour, inserts one of its edges, evicts the
    (at most two) edges it collides with, and greedily refills freed vertices
    with edges of still-deficient colours.  The best state seen is returned;
    a state only counts as better if no colour's satisfied amount
    ``min(count, demand)`` dropped below its value in ``partial``.
    """
    ds = _demands(dem)
    k = len(ds)
    chosen = tuple(partial.chosen)
    if budget <= 0 or partial.feasible(ds):
        return partial
    rng = random.Random(seed)
    n2 = inst.n2
    eu: list[int] = []
    ev: list[int] = []
    ec: list[int] = []
    for c, idx in enumerate(chosen):
        for u, v in inst.matchings[idx]:
            eu.append(u)
            ev.append(v)
            ec.append(c)
    m = len(eu)
    index = {(eu[e], ev[e]): e for e in range(m)}
    inc: list[list[int]] = [[] for _ in range(n2)]
    byc: list[list[int]] = [[] for _ in range(k)]
    for e in range(m):
        inc[eu[e]].append(e)
        inc[ev[e]].append(e)
        byc[ec[e]].append(e)
    mate = [-1] * n2
    inM = [False] * m
    cnt = [0] * k
    extra: list[Edge] = []  # input edges outside chosen colours, kept as-is

    def add(e):
        mate[eu[e]] = e
        mate[ev[e]] = e
        inM[e] = True
        cnt[ec[e]] += 1

    def rem(e):
        mate[eu[e]] = -1
        mate[ev[e]] = -1
        inM[e] = False
        cnt[ec[e]] -= 1

    blocked = bytearray(n2)
    for ed in partial.edges:
        e = index.get(ed)
        if e is None:
            extra.append(ed)
            blocked[ed[0]] = blocked[ed[1]] = 1
        else:
            add(e)
    floor = [min(c, a) for c, a in zip(cnt, ds)]

    def deficit():
        return sum(max(0, a - c) for a, c in zip(ds, cnt))

    def snapshot():
        return [e for e in range(m) if inM[e]]

    best_def = deficit()
    best = snapshot()
    tabu = [0] * m
    for step in range(budget):
        defs = [c for c in range(k) if cnt[c] < ds[c]]
        if not defs:
            break
        c = rng.choice(defs)
        cands = [e for e in byc[c] if not inM[e] and not blocked[eu[e]] and not blocked[ev[e]]]
        if not cands:
            continue
        if rng.random() < noise:
            e = rng.choice(cands)
        else:
            bs = None
            ties: list[int] = []
            for f in cands:
                s = 1.0
                for b in (mate[eu[f]], mate[ev[f]]):
                    if b >= 0 and cnt[ec[b]] <= ds[ec[b]]:
                        s -= 1
                if tabu[f] > step:
                    s -= 0.5
                if bs is None or s > bs:
                    bs, ties = s, [f]
                elif s == bs:
                    ties.append(f)
            e = rng.choice(ties)
        freed: list[int] = []
        for b in {mate[eu[e]], mate[ev[e]]}:
            if b >= 0:
                rem(b)
                tabu[b] = step + 7
                freed.extend((eu[b], ev[b]))
        add(e)
        for x in freed:
            if mate[x] >= 0:
                continue
            opts = [f for f in inc[x] if not inM[f] and mate[eu[f]] < 0 and mate[ev[f]] < 0
                    and not blocked[eu[f]] and not blocked[ev[f]] and cnt[ec[f]] < ds[ec[f]]]
            if opts:
                add(rng.choice(opts))
        d = deficit()
        if d < best_def and all(min(cc, a) >= fl for cc, a, fl in zip(cnt, ds, floor)):
            best_def, best = d, snapshot()
    edges = [(eu[e], ev[e]) for e in best] + extra
    return Solution.from_edges(inst, edges, chosen)


# -- tiered fallback ------------------------------------------------------------


def fallback_solve(inst: Instance, dem, seed: int = 0, cap: int = DEFAULT_CAP,
                   chosen=None, restarts: int = 8, budget: int | None = None) -> SolveResult:
    """greedy -> local search (with restarts) -> exhaustive search within cap."""
    ds = _demands(dem)
    k = len(ds)
    log: list[str] = []
    if k > inst.ell:
        return SolveResult("infeasible", tier="arity", log=[f"{k} demands but {inst.ell} matchings"])
    if 2 * sum(ds) > inst.n2:
        return SolveResult("infeasible", tier="counting", log=["total demand exceeds n"])
    g = greedy_colourful_matching(inst, ds, chosen)
    if g is not None:
        return SolveResult("feasible", g, tier="greedy", ell_used=k, log=["greedy succeeded"])
    log.append("greedy fell short")
    small = inst.n2 <= cap
    if budget is None:
        budget = 200 if small else 20000
    rng = derive_rng(seed, "fallback")
    edges, slots = _greedy_partial(inst, ds, chosen)
    for r in range(restarts if not small else 2):
        if r > 0 or slots is None:
            if chosen is not None:
                slots = tuple(chosen)
            else:
                slots = tuple(rng.sample(range(inst.ell), k))
            edges = []
        start = Solution.from_edges(inst, edges, slots)
        sol = local_search_improve(inst, ds, start, budget=budget, seed=rng.getrandbits(32))
        if sol.feasible(ds) and not verify_solution(inst, ds, sol):
            log.append(f"local search succeeded on restart {r}")
            return SolveResult("feasible", sol, tier="local", ell_used=k, log=log)
    log.append("local search fell short")
    if small:
        if chosen is not None:
            sol = exact_colourful_matching(inst, ds, chosen, cap=cap)
        else:
            sol = exact_search(inst, ds, cap=cap)
        if sol is None:
            log.append("exhaustive search: no solution exists")
            return SolveResult("infeasible", tier="exact", log=log)
        log.append("exhaustive search found a solution")
        return SolveResult("feasible", sol, tier="exact", ell_used=k, log=log)
    log.append(f"n2={inst.n2} above exact cap {cap}")
    return SolveResult("no-solution", tier="none", log=log)
