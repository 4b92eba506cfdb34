"""Solver for demand sequences whose terms are all large.

The largest demand is removed repeatedly.  Each time, the remaining demands
are scaled up so that they still account for the mass of the removed one.
This stops once every term is moderate, and that short sequence is solved
directly.  The answer is then unwound one step at a time.  Each unwinding
step is a necklace lift: it brings back the removed demand's matching, and
the scaled-up classes hand over a p/q share of their edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .buckets import solve_small
from .core import DemandSequence, Instance, SolveResult, Solution, Violation, verify_solution
from .errors import ColourMatchError, InvariantViolation, RegimeError
from .necklace import lift_one
from .numeric import derive_seed, floor_snap, parse_rational, real_power
from .oracle import fallback_solve, local_search_improve


@dataclass(frozen=True)
class PQChoice:
    p: int
    q: int
    in_regime: bool
    bracket_ok: bool

    @property
    def ratio(self) -> float:
        return self.p / self.q


def choose_pq(m_prev, n: int, delta, q: int | None = None) -> PQChoice:
    """Integer q in [n^(4d)/4, n^(4d)/2] (at least 2) and p with 0 <= m - p/q <= 1/q."""
    if not 0 < m_prev < 1:
        raise ValueError(f"ratio must lie in (0,1), got {m_prev}")
    delta = parse_rational(delta)
    span = real_power(n, 4 * delta)
    lo, hi = span / 4, span / 2
    if q is None:
        q = max(2, math.ceil(lo - 1e-12))
    in_regime = lo <= q <= hi
    m = parse_rational(m_prev)
    p = min(max(1, math.floor(m * q)), q - 1)
    gap = m - Fraction(p, q)
    return PQChoice(p, q, in_regime, 0 <= gap <= Fraction(1, q))


@dataclass
class ReductionChain:
    epsilon: Fraction
    n: int
    delta: Fraction
    mu: Fraction
    S: int
    lam: float
    chain: list[list[int]]
    ratios: list[float]
    pq: list[PQChoice]           # pq[j-1] is used to pass from A_j back to A_{j-1}
    order: list[int]             # chain position -> original demand index
    violations: list[Violation] = field(default_factory=list)
    stop_reason: str = ""
    exhausted: bool = False

    @property
    def s(self) -> int:
        return len(self.chain) - 1

    @property
    def sums(self) -> list[int]:
        return [sum(A) for A in self.chain]

    def to_json(self) -> dict:
        return {
            "epsilon": str(self.epsilon), "n": self.n, "delta": str(self.delta), "mu": str(self.mu),
            "S": self.S, "lambda": self.lam, "s": self.s, "chain": self.chain, "sums": self.sums,
            "ratios": self.ratios, "pq": [[c.p, c.q] for c in self.pq], "order": self.order,
            "stop": self.stop_reason, "violations": [str(v) for v in self.violations],
        }


def chain_constants(epsilon, n: int):
    eps = parse_rational(epsilon)
    delta = eps / 10
    mu = eps / (2 * (1 - eps))
    S = math.ceil(2 * (1 + float(mu)) * real_power(n, delta) * math.log(n))
    lam = math.log(1 + float(mu)) / S
    return delta, mu, S, lam


def next_terms(A: list[int], lam: float, m: float) -> list[int]:
    """Drop the last term, scale the rest by (1+lam)/(1-m), floor."""
    f = (1 + lam) / (1 - m)
    return [floor_snap(f * a) for a in A[:-1]]


def build_chain(dem, n: int, strict: bool = True, exhaust: bool = False) -> ReductionChain:
    """Construct A_0..A_s.

    With ``strict`` any failed numeric check raises RegimeError naming it.
    Otherwise failures are recorded in ``violations`` and construction goes
    on.  ``exhaust`` ignores the size stop and reduces down to one term.
    """
    eps = dem.epsilon
    ds = list(dem)
    k = len(ds)
    delta, mu, S, lam = chain_constants(eps, n)
    order = sorted(range(k), key=lambda i: (ds[i], i))
    A = [ds[i] for i in order]
    viol: list[Violation] = []

    def fail(code: str, msg: str):
        if strict:
            raise RegimeError(code, msg)
        viol.append(Violation(code, msg))

    low = real_power(n, eps)
    if A[0] < low:
        fail("large-terms", f"demand {A[0]} below n^eps={low:.4g}")
    if not sum(A) < (1 - eps) * n:
        fail("sum-budget", f"sum {sum(A)} not below (1-eps)n")
    if 3 * sum(A) < n:
        fail("sum-floor", f"sum {sum(A)} below n/3; greedy applies")

    top = real_power(n, 1 - delta)
    floor_ratio = real_power(n, -delta)
    chain = [A]
    ratios: list[float] = []
    pq: list[PQChoice] = []
    reason = ""
    while True:
        cur = chain[-1]
        j = len(chain) - 1
        if len(cur) == 1:
            reason = "single term"
            break
        if cur[-1] <= top and not exhaust:
            reason = "largest term below n^(1-delta)"
            break
        if j >= S:
            fail("step-bound", f"reached S={S} steps")
            reason = "step bound"
            break
        sigma = sum(cur)
        m = cur[-1] / sigma
        if m < floor_ratio:
            fail("ratio-floor", f"m_{j}={m:.4g} below n^-delta={floor_ratio:.4g}")
        nxt = next_terms(cur, lam, m)
        s1 = sum(nxt)
        if not (1 + lam / 2) * sigma <= s1 <= (1 + lam) * sigma:
            fail("sum-growth", f"sigma_{j + 1}={s1} outside [(1+l/2), (1+l)] * {sigma}")
        if any(b < a for a, b in zip(cur, nxt)):
            fail("monotone-terms", f"a_(i,{j + 1}) < a_(i,{j})")
        if any(x > y for x, y in zip(nxt, nxt[1:])):
            fail("nondecreasing", f"A_{j + 1} not sorted")
        if s1 > (1 - eps / 2) * n:
            fail("sum-budget", f"sigma_{j + 1}={s1} above (1-eps/2)n")
        choice = choose_pq(m, n, delta)
        if not choice.in_regime:
            fail("q-range", f"q={choice.q} outside [n^(4d)/4, n^(4d)/2]")
        ratios.append(m)
        pq.append(choice)
        chain.append(nxt)
    return ReductionChain(eps, n, delta, mu, S, lam, chain, ratios, pq, order, viol, reason, exhaust)


def happy_check_chain(ch: ReductionChain) -> list[Violation]:
    """Independent recheck of every chain property."""
    out: list[Violation] = []
    n, eps, lam = ch.n, ch.epsilon, ch.lam
    top = real_power(n, 1 - ch.delta)
    floor_ratio = real_power(n, -ch.delta)
    span = real_power(n, 4 * ch.delta)
    for j, A in enumerate(ch.chain):
        if any(x > y for x, y in zip(A, A[1:])):
            out.append(Violation("nondecreasing", f"A_{j} is not sorted"))
        if len(A) != len(ch.chain[0]) - j:
            out.append(Violation("length", f"A_{j} has {len(A)} terms"))
        if sum(A) > (1 - eps / 2) * n:
            out.append(Violation("sum-budget", f"sigma_{j}={sum(A)} above (1-eps/2)n"))
    for j in range(ch.s):
        A, B = ch.chain[j], ch.chain[j + 1]
        s0, s1 = sum(A), sum(B)
        if any(b < a for a, b in zip(A, B)):
            out.append(Violation("monotone-terms", f"some a_(i,{j + 1}) < a_(i,{j})"))
        if j >= len(ch.ratios) or not math.isclose(ch.ratios[j], A[-1] / s0, rel_tol=1e-12):
            out.append(Violation("recursion", f"ratio m_{j} does not match A_{j}"))
        elif B != next_terms(A, lam, ch.ratios[j]):
            out.append(Violation("recursion", f"A_{j + 1} does not follow from A_{j}"))
        if not (1 + lam / 2) * s0 <= s1 <= (1 + lam) * s0:
            out.append(Violation("sum-growth", f"sigma_{j + 1}={s1} outside [(1+l/2), (1+l)] * {s0}"))
        if A[-1] <= top and not ch.exhausted:
            out.append(Violation("stop-rule", f"step {j} taken although the largest term is small"))
        if j < len(ch.ratios) and ch.ratios[j] < floor_ratio:
            out.append(Violation("ratio-floor", f"m_{j} below n^-delta"))
        if j < len(ch.pq):
            c = ch.pq[j]
            gap = parse_rational(ch.ratios[j]) - Fraction(c.p, c.q)
            if not 0 <= gap <= Fraction(1, c.q):
                out.append(Violation("pq-bracket", f"p/q={c.p}/{c.q} vs m_{j}={ch.ratios[j]:.6g}"))
            if not span / 4 <= c.q <= span / 2:
                out.append(Violation("q-range", f"q={c.q} outside [{span / 4:.4g}, {span / 2:.4g}]"))
    if ch.s >= ch.S:
        out.append(Violation("step-bound", f"s={ch.s} not below S={ch.S}"))
    last = ch.chain[-1]
    if len(last) > 1 and last[-1] > top and ch.s < ch.S:
        out.append(Violation("stop-rule", "stopped while the largest term is still big"))
    return out


# -- solver ---------------------------------------------------------------------


def _base_case(inst: Instance, demands: list[int], eps, pool: list[int], seed: int, cap: int):
    """Solve the last chain sequence on the matchings in ``pool``."""
    if len(demands) == 1:
        a = demands[0]
        if a > inst.n:
            return None, None, 0, "base demand exceeds n"
        idx = pool[0]
        edges = list(inst.matchings[idx][:a])
        return [edges], [idx], 1, "single term filled from one matching"
    sub = inst.sub(pool)
    small_eps = min(parse_rational(eps) / 10, Fraction(1, 2))
    res = solve_small(sub, DemandSequence(demands, small_eps), seed=seed, cap=cap)
    if not res.feasible:
        return None, None, res.ell_used, "base solve failed"
    sol = res.solution
    classes = [[e for e in sol.edges if sub.colour_of.get(e) == c] for c in sol.chosen]
    return classes, [pool[c] for c in sol.chosen], res.ell_used, f"base solved by {res.tier}"


def solve_large(inst: Instance, dem, seed: int = 0, fallback: bool = True, cap: int = 16,
                forced_q: int | None = None) -> SolveResult:
    """Chain, base solve, then one lift per chain step.

    ``forced_q`` is a test mode: the chain is built without regime checks
    and down to a single term, and every lift uses that q.  The base sees
    all matchings but the last s.  Those s are kept back for the lifts and
    used in index order.
    """
    ds = list(dem)
    k = len(ds)
    log: list[str] = []
    artifacts: dict = {}
    n = inst.n
    lifted = None
    ell_used = 0
    try:
        testing = forced_q is not None
        ch = build_chain(dem, n, strict=not testing, exhaust=testing)
        artifacts["chain"] = ch
        report = happy_check_chain(ch)
        if report and not testing:
            raise InvariantViolation(f"chain recheck failed: {report[0]}")
        s = ch.s
        log.append(f"chain built with s={s} ({ch.stop_reason})")
        if inst.ell < k:
            raise RegimeError("matching-supply", f"{k} demands but {inst.ell} matchings")
        reserve = list(range(inst.ell - s, inst.ell))
        pool = list(range(inst.ell - s))
        classes, mapping, used, note = _base_case(inst, ch.chain[-1], dem.epsilon, pool,
                                                  derive_seed(seed, "base"), cap)
        log.append(note)
        if classes is None:
            raise RegimeError("base", note)
        ell_used = used
        for step, j in enumerate(range(s, 0, -1)):
            choice = ch.pq[j - 1]
            if testing:
                choice = choose_pq(ch.ratios[j - 1], n, ch.delta, q=forced_q)
            extra_idx = reserve[step]
            res = lift_one(classes, inst.matchings[extra_idx], choice.p, choice.q)
            classes = res.classes
            mapping.append(extra_idx)
            ell_used += 1
            target = ch.chain[j - 1]
            short = [i for i, (A, a) in enumerate(zip(classes, target)) if len(A) < a]
            log.append(f"lift {step + 1}: p/q={choice.p}/{choice.q}, "
                       f"{len(res.conflicts)} conflict pairs, {len(short)} short classes")
        chosen = [None] * k
        edges = []
        for pos, (A, idx) in enumerate(zip(classes, mapping)):
            chosen[ch.order[pos]] = idx
            edges.extend(A)
        lifted = Solution.from_edges(inst, edges, chosen)
        if not verify_solution(inst, ds, lifted):
            return SolveResult("feasible", lifted, tier="reduction", ell_used=ell_used, log=log,
                               artifacts=artifacts)
        log.append("lifted solution misses some original demand")
    except (RegimeError, ColourMatchError) as exc:
        if isinstance(exc, InvariantViolation):
            raise
        log.append(f"reduction not applicable: {exc}")
    if not fallback:
        return SolveResult("no-solution", tier="none", log=log, artifacts=artifacts)
    if lifted is not None:
        rep = local_search_improve(inst, ds, lifted, budget=20000, seed=derive_seed(seed, "repair"))
        if not verify_solution(inst, ds, rep):
            log.append("local search repaired the lifted solution")
            return SolveResult("feasible", rep, tier="reduction+local", ell_used=ell_used, log=log,
                               artifacts=artifacts)
    res = fallback_solve(inst, ds, seed=seed, cap=cap)
    res.log[:0] = log
    res.artifacts.update(artifacts)
    return res
