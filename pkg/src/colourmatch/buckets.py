"""Solver for demand sequences whose terms are all small.

Demands are sorted into geometrically growing buckets.  Bucket j gets a
target m_j a little above its demands and a budget of b_j matchings.  A
random vertex partition gives every bucket its own part of the vertex set.
Inside its part, each bucket then looks for one matching that uses at most
m_j edges of each of its b_j matchings, with most matchings close to that
cap.  The matchings that come close are handed to the bucket's demands.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .core import Instance, SolveResult, Solution, Violation, verify_solution
from .errors import ConcentrationFailure, InvariantViolation, RegimeError
from .hypermatch import claim_matching, prune_deficits
from .numeric import ceil_snap, derive_rng, derive_seed, parse_rational, real_power, snap
from .oracle import fallback_solve

PARTITION_RETRIES = 50
PIPELINE_ATTEMPTS = 3


@dataclass(frozen=True)
class PlanConstants:
    epsilon: Fraction
    delta: Fraction
    lam: Fraction
    K: Fraction
    C: int

    @classmethod
    def of(cls, epsilon) -> "PlanConstants":
        eps = parse_rational(epsilon)
        delta = eps / 100
        lam = eps / 400
        return cls(eps, delta, lam, 4 / lam, math.ceil(1 / delta))


def _geometric_floor(C: int, delta: Fraction, i: int) -> int:
    """floor(C * (1+delta)**i), exact."""
    approx = C * float(1 + delta) ** i
    f = math.floor(approx)
    if abs(approx - round(approx)) > 1e-6 * max(1.0, approx) and approx < 2 ** 50:
        return f
    r = (1 + delta) ** i
    return (C * r.numerator) // r.denominator


def bucket_count(consts: PlanConstants, n: int) -> int:
    """Smallest t with C(1+delta)^(t-C) >= n^(1-eps); floor(n^(1-eps)) if that is at most C."""
    top = real_power(n, 1 - consts.epsilon)
    C = consts.C
    if top <= C:
        return max(1, math.floor(top))
    g = math.log(top / C) / math.log(float(1 + consts.delta))
    i = max(0, math.ceil(snap(g)) - 2)
    while C * float(1 + consts.delta) ** i < top and not math.isclose(
            C * float(1 + consts.delta) ** i, top, rel_tol=1e-12):
        i += 1
    return C + i


def interval_bounds(consts: PlanConstants, t: int) -> list[tuple[int, int]]:
    """(lo, hi) integer bounds of I_1..I_t, plus I_{t+1} and I_{t+2} for targets."""
    C = consts.C
    out = []
    for j in range(1, t + 3):
        if j <= C:
            out.append((j, j))
        else:
            i = j - C
            lo = _geometric_floor(C, consts.delta, i - 1) + 1
            hi = _geometric_floor(C, consts.delta, i)
            out.append((lo, hi))
    return out


def targets(consts: PlanConstants, bounds: list[tuple[int, int]], t: int) -> list[int]:
    # m_j = j inside the unit buckets, else the least integer of I_{j+2}
    return [j if j <= consts.C else bounds[j + 1][0] for j in range(1, t + 1)]


@dataclass(frozen=True)
class Bucket:
    j: int
    lo: int
    hi: int
    m: int
    count: int
    labels: tuple[int, ...]
    b: int
    D: float
    Delta: float
    p: float

    def contains(self, x: int) -> bool:
        return self.lo <= x <= self.hi


@dataclass
class BucketPlan:
    epsilon: Fraction
    delta: Fraction
    lam: Fraction
    K: Fraction
    C: int
    t: int
    n: int
    k: int
    buckets: list[Bucket]

    @property
    def ell(self) -> int:
        return sum(b.b for b in self.buckets)

    @property
    def p0(self) -> float:
        return 1.0 - sum(b.p for b in self.buckets)

    def active(self) -> list[Bucket]:
        return [b for b in self.buckets if b.count]

    def bucket_of(self, x: int) -> Bucket:
        for b in self.buckets:
            if b.contains(x):
                return b
        raise KeyError(x)

    def to_json(self) -> dict:
        return {
            "epsilon": str(self.epsilon), "delta": str(self.delta), "lambda": str(self.lam),
            "K": str(self.K), "C": self.C, "t": self.t, "n": self.n, "k": self.k,
            "ell": self.ell, "p0": self.p0,
            "buckets": [
                {"j": b.j, "interval": [b.lo, b.hi], "m": b.m, "n_j": b.count,
                 "labels": list(b.labels), "b": b.b, "D": b.D, "Delta": b.Delta, "p": b.p}
                for b in self.active()
            ],
        }


def build_plan(dem, n: int, epsilon=None) -> BucketPlan:
    ds = list(dem)
    eps = parse_rational(epsilon if epsilon is not None else dem.epsilon)
    consts = PlanConstants.of(eps)
    top = real_power(n, 1 - eps)
    big = [a for a in ds if a > top]
    if big:
        raise RegimeError("small-terms", f"demand {max(big)} exceeds n^(1-eps)={top:.4g}")
    t = bucket_count(consts, n)
    bounds = interval_bounds(consts, t)
    ms = targets(consts, bounds, t)
    excess_scale = real_power(n, consts.lam + Fraction(1, 2))
    by_bucket: dict[int, list[int]] = {}
    js = [j for j in range(1, t + 1)]
    for i, a in enumerate(ds):
        # bucket index by bisection over the upper bounds
        lo, hi = 0, t - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if bounds[mid][1] >= a:
                hi = mid
            else:
                lo = mid + 1
        by_bucket.setdefault(js[lo], []).append(i)
    K = float(consts.K)
    buckets = []
    for j in range(1, t + 1):
        labels = tuple(by_bucket.get(j, ()))
        m = ms[j - 1]
        nj = len(labels)
        b = nj + ceil_snap(excess_scale / math.sqrt(m)) if nj else 0
        D = b * b * m / n
        Delta = K * math.sqrt(max(0.0, D * math.log(D))) if D > 0 else 0.0
        buckets.append(Bucket(j, bounds[j - 1][0], bounds[j - 1][1], m, nj, labels, b, D, Delta,
                              m * b / n))
    return BucketPlan(eps, consts.delta, consts.lam, consts.K, consts.C, t, n, len(ds), buckets)


def check_plan(plan: BucketPlan, n: int | None = None, k: int | None = None) -> list[Violation]:
    n = plan.n if n is None else n
    k = plan.k if k is None else k
    eps, delta = plan.epsilon, plan.delta
    out: list[Violation] = []
    if plan.ell - k > eps * k:
        out.append(Violation("excess-matchings", f"ell-k={plan.ell - k} > eps*k={float(eps * k):.4g}"))
    mass = sum(b.b * b.m for b in plan.buckets)
    if mass > (1 - eps / 4) * n:
        out.append(Violation("mass-budget", f"sum b_j m_j={mass} > (1-eps/4)n={float((1 - eps / 4) * n):.6g}"))
    if plan.p0 < -1e-12:
        out.append(Violation("leftover-probability", f"p0={plan.p0:.6g} < 0"))
    out.extend(check_brackets(plan.buckets, plan.C, delta))
    return out


def check_brackets(buckets, C: int, delta: Fraction) -> list[Violation]:
    """(1+d)x <= m_j <= (1+d)^3 x at both ends of every I_j, and rounding safety."""
    out: list[Violation] = []
    g = 1 + delta
    prev_m = 0
    for b in buckets:
        if b.m < prev_m:
            out.append(Violation("target-order", f"m_{b.j}={b.m} below m_{b.j - 1}={prev_m}"))
        prev_m = b.m
        if b.j <= C:
            if not (b.lo == b.hi == b.m == b.j):
                out.append(Violation("target-bracket", f"unit bucket {b.j} has m={b.m}"))
        else:
            if b.lo > b.hi:
                out.append(Violation("target-bracket", f"I_{b.j} is empty"))
                continue
            if g * b.hi > b.m:
                out.append(Violation("target-bracket", f"(1+d)*{b.hi} > m_{b.j}={b.m}"))
            if b.m > g ** 3 * b.lo:
                out.append(Violation("target-bracket", f"m_{b.j}={b.m} > (1+d)^3*{b.lo}"))
        if math.ceil(Fraction(b.m) / g) < b.hi:
            out.append(Violation("target-rounding", f"ceil(m_{b.j}/(1+d)) < {b.hi}"))
    return out


def plan_skeleton(epsilon, n: int) -> list[Bucket]:
    """Intervals and targets alone, with no demands attached."""
    consts = PlanConstants.of(epsilon)
    t = bucket_count(consts, n)
    bounds = interval_bounds(consts, t)
    ms = targets(consts, bounds, t)
    return [Bucket(j, bounds[j - 1][0], bounds[j - 1][1], ms[j - 1], 0, (), 0, 0.0, 0.0, 0.0)
            for j in range(1, t + 1)]


# -- random partition -----------------------------------------------------------


@dataclass
class PartitionCertificate:
    parts: list[list[int]]
    groups: dict[int, list[int]]            # bucket j -> matching indices
    degree_range: dict[int, tuple[int, int]]
    intersections: dict[int, list[int]]     # bucket j -> |M ∩ E(G_j)| per matching
    degree_ok: dict[int, bool]
    intersection_ok: dict[int, bool]
    attempts: int = 1

    @property
    def passed(self) -> bool:
        return all(self.degree_ok.values()) and all(self.intersection_ok.values())

    def to_json(self) -> dict:
        return {
            "part_sizes": [len(p) for p in self.parts],
            "degree_range": {str(j): list(r) for j, r in self.degree_range.items()},
            "degree_ok": {str(j): v for j, v in self.degree_ok.items()},
            "intersection_ok": {str(j): v for j, v in self.intersection_ok.items()},
            "attempts": self.attempts,
        }


def group_matchings(plan: BucketPlan, pool) -> dict[int, list[int]]:
    """First-fit: bucket j takes the next b_j matchings of ``pool`` in order."""
    pool = list(pool)
    need = plan.ell
    if len(pool) < need:
        raise RegimeError("matching-supply", f"plan needs {need} matchings, {len(pool)} given")
    out: dict[int, list[int]] = {}
    pos = 0
    for b in plan.active():
        out[b.j] = pool[pos:pos + b.b]
        pos += b.b
    return out


def _sample_partition(inst: Instance, plan: BucketPlan, groups, rng) -> PartitionCertificate:
    active = plan.active()
    weights = [max(0.0, plan.p0)] + [b.p for b in active]
    labels = [0] + [b.j for b in active]
    part_of = rng.choices(labels, weights=weights, k=inst.n2) if sum(weights) > 0 else [0] * inst.n2
    parts: dict[int, list[int]] = {lab: [] for lab in labels}
    for v, lab in enumerate(part_of):
        parts[lab].append(v)
    deg_range, inter, dok, iok = {}, {}, {}, {}
    for b in active:
        members = parts[b.j]
        counts = []
        degs = dict.fromkeys(members, 0)
        for idx in groups[b.j]:
            c = 0
            for u, v in inst.matchings[idx]:
                if part_of[u] == b.j and part_of[v] == b.j:
                    c += 1
                    degs[u] += 1
                    degs[v] += 1
            counts.append(c)
        lo = min(degs.values()) if degs else 0
        hi = max(degs.values()) if degs else 0
        deg_range[b.j] = (lo, hi)
        inter[b.j] = counts
        dok[b.j] = bool(degs) and b.D - b.Delta <= lo and hi <= b.D + b.Delta
        c0, half = b.D * b.m, b.Delta * b.m / 2
        iok[b.j] = all(c0 - half <= c <= c0 + half for c in counts)
    ordered = [parts[0]] + [parts.get(b.j, []) for b in plan.buckets]
    return PartitionCertificate(ordered, groups, deg_range, inter, dok, iok)


def random_partition(inst: Instance, plan: BucketPlan, seed: int, retries: int = PARTITION_RETRIES,
                     groups=None) -> PartitionCertificate:
    """Sample vertex parts X_0..X_t with probabilities p_0..p_t until the
    degree and intersection bounds all hold."""
    if groups is None:
        groups = group_matchings(plan, range(inst.ell))
    rng = derive_rng(seed, "partition")
    for attempt in range(1, max(1, retries) + 1):
        cert = _sample_partition(inst, plan, groups, rng)
        cert.attempts = attempt
        if cert.passed:
            return cert
    raise ConcentrationFailure(f"no certified partition in {retries} samples")


# -- sequence augmentation ----------------------------------------------------


def augment_floor(k: int, n: int, epsilon) -> int:
    """a = ceil(n^(1-eps/400) / k)."""
    eps = parse_rational(epsilon)
    return ceil_snap(real_power(n, 1 - eps / 400) / k)


def augment_sequence(dem, n: int, strict: bool = True):
    """Raise every demand to at least ``augment_floor``.

    With ``strict`` the result must keep sum < (1-eps/2)n, else RegimeError.
    """
    eps = dem.epsilon
    a = augment_floor(dem.k, n, eps)
    out = dem.with_demands(max(x, a) for x in dem)
    if strict and not out.total < (1 - eps / 2) * n:
        raise RegimeError("augment-budget",
                          f"augmented sum {out.total} >= (1-eps/2)n={float((1 - eps / 2) * n):.6g}")
    return out


# -- solver ---------------------------------------------------------------------


def _run_pipeline(inst: Instance, ds: list[int], plan: BucketPlan, seed: int, log: list[str],
                  retries: int):
    """One certified pass.  Returns (Solution, certificate) or raises."""
    groups = group_matchings(plan, range(inst.ell))
    cert = random_partition(inst, plan, seed, retries=retries, groups=groups)
    log.append(f"partition certified after {cert.attempts} sample(s)")
    part_of = [0] * inst.n2
    for lab, members in enumerate(cert.parts):
        for v in members:
            part_of[v] = lab
    edges = []
    chosen = [None] * len(ds)
    used_vertices: set[int] = set()
    for b in plan.active():
        G, idxs = [], []
        for idx in groups[b.j]:
            E = [e for e in inst.matchings[idx] if part_of[e[0]] == b.j and part_of[e[1]] == b.j]
            if len(E) >= b.m:
                G.append(E)
                idxs.append(idx)
        if len(G) < b.count:
            raise ConcentrationFailure(f"bucket {b.j}: {len(G)} matchings reach size m={b.m}")
        res = claim_matching(G, b.m, derive_seed(seed, "bucket", b.j))
        rep = prune_deficits(res.per_colour, G, b.m, plan.delta)
        if not rep.bound_holds:
            raise InvariantViolation(f"bucket {b.j}: bad colours exceed deficit bound")
        if len(rep.survivors) < b.count:
            raise ConcentrationFailure(f"bucket {b.j}: {len(rep.survivors)} survivors < n_j={b.count}")
        surv = sorted(rep.survivors, key=lambda i: (-len(res.per_colour[i]), i))[:b.count]
        dem_order = sorted(b.labels, key=lambda i: (-ds[i], i))
        floor_size = math.ceil(Fraction(b.m) / (1 + plan.delta))
        for di, si in zip(dem_order, surv):
            A = res.per_colour[si]
            if len(A) < floor_size or floor_size < ds[di]:
                raise InvariantViolation(f"bucket {b.j}: |A|={len(A)} below demand {ds[di]}")
            for e in A:
                if e[0] in used_vertices or e[1] in used_vertices:
                    raise InvariantViolation("assembled classes share a vertex")
                used_vertices.update(e)
            edges.extend(A)
            chosen[di] = idxs[si]
    sol = Solution.from_edges(inst, edges, chosen)
    return sol, cert


def solve_small(inst: Instance, dem, seed: int = 0, fallback: bool = True, cap: int = 16,
                attempts: int = PIPELINE_ATTEMPTS, retries: int = PARTITION_RETRIES) -> SolveResult:
    ds = list(dem)
    n = inst.n
    log: list[str] = []
    artifacts: dict = {}
    t0 = time.perf_counter()
    eps = dem.epsilon
    try:
        target = dem
        if dem.k < real_power(n, Fraction(1, 2) + eps):
            try:
                target = augment_sequence(dem, n)
                log.append("demands augmented to the floor value")
            except RegimeError as exc:
                log.append(f"augmentation skipped ({exc})")
        plan = build_plan(target, n)
        artifacts["plan"] = plan
        issues = check_plan(plan, n, dem.k)
        artifacts["plan_report"] = [str(v) for v in issues]
        for v in issues:
            log.append(f"plan check: {v}")
        if plan.p0 < 0:
            raise RegimeError("leftover-probability", "bucket probabilities exceed 1")
        if inst.ell < plan.ell:
            raise RegimeError("matching-supply", f"plan needs {plan.ell} matchings, instance has {inst.ell}")
        tds = list(target)
        for a in range(attempts):
            try:
                sol, cert = _run_pipeline(inst, tds, plan, derive_seed(seed, "small", a), log, retries)
            except ConcentrationFailure as exc:
                log.append(f"pipeline attempt {a}: {exc}")
                continue
            artifacts["partition"] = cert
            if verify_solution(inst, ds, sol):
                raise InvariantViolation("pipeline output failed verification")
            log.append(f"pipeline succeeded ({time.perf_counter() - t0:.3f}s)")
            return SolveResult("feasible", sol, tier="pipeline", ell_used=plan.ell, log=log,
                               artifacts=artifacts)
    except RegimeError as exc:
        log.append(f"pipeline not applicable: {exc}")
    if not fallback:
        return SolveResult("no-solution", tier="none", log=log, artifacts=artifacts)
    res = fallback_solve(inst, ds, seed=seed, cap=cap)
    res.log[:0] = log
    res.artifacts.update(artifacts)
    return res
