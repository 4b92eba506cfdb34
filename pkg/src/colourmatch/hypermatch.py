"""Auxiliary 3-uniform hypergraph, a nibble matcher, and deficit pruning.

Each matching M_i of a coloured graph is cut into m groups; every group gets
its own extra vertex y, and each edge {u, v} of the group becomes the triple
(u, v, y).  A matching in this hypergraph, with the y's dropped, is a matching
of the graph that uses at most m edges of every colour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import Edge, norm_edge, round_robin_matching
from .errors import GroupUnderflowError, InvariantViolation
from .numeric import derive_rng, parse_rational

Triple = tuple[int, int, int]

BITE = 0.05
MAX_ROUNDS = 60


@dataclass(frozen=True)
class AuxHypergraph:
    x_vertices: tuple[int, ...]
    y_vertices: tuple[int, ...]
    triples: tuple[Triple, ...]
    group_of: tuple[tuple[int, int], ...]  # parallel to triples: (matching, group)
    m: int
    b: int

    @property
    def vertex_count(self) -> int:
        return len(self.x_vertices) + len(self.y_vertices)

    def y_of(self, i: int, j: int) -> int:
        return self.y_vertices[i * self.m + j]

    def degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for t in self.triples:
            for x in t:
                deg[x] = deg.get(x, 0) + 1
        return deg

    def is_linear(self) -> bool:
        """Pairwise scan: no two triples share two vertices."""
        seen: set[tuple[int, int]] = set()
        for t in self.triples:
            a, b, c = sorted(t)
            for pair in ((a, b), (a, c), (b, c)):
                if pair in seen:
                    return False
                seen.add(pair)
        return True


def build_aux_hypergraph(G: Sequence[Sequence[Edge]], m: int, seed: int = 0) -> AuxHypergraph:
    """Split every matching of ``G`` into ``m`` near-equal groups after a seeded shuffle."""
    if m < 1:
        raise GroupUnderflowError(f"group count must be positive, got {m}")
    xs = sorted({x for M in G for e in M for x in e})
    base = (xs[-1] + 1) if xs else 0
    ys = tuple(range(base, base + m * len(G)))
    triples: list[Triple] = []
    groups: list[tuple[int, int]] = []
    for i, M in enumerate(G):
        if len(M) < m:
            raise GroupUnderflowError(f"matching {i} has {len(M)} edges, fewer than m={m}")
        edges = [norm_edge(*e) for e in M]
        derive_rng(seed, "groups", i).shuffle(edges)
        q, r = divmod(len(edges), m)
        pos = 0
        for j in range(m):
            size = q + (1 if j < r else 0)
            y = ys[i * m + j]
            for u, v in edges[pos:pos + size]:
                triples.append((u, v, y))
                groups.append((i, j))
            pos += size
    return AuxHypergraph(tuple(xs), ys, tuple(triples), tuple(groups), m, len(G))


@dataclass
class NibbleResult:
    triples: list[Triple]
    covered: int
    N: int
    rounds: int
    swaps: int = 0

    @property
    def fraction(self) -> float:
        return self.covered / self.N if self.N else 1.0


def _augment(triples: Sequence[Triple], owner: dict[int, Triple]) -> int:
    """Replace one matched triple by two disjoint ones while possible."""
    swaps = 0
    improved = True
    while improved:
        improved = False
        pending: dict[Triple, list[Triple]] = {}
        for t in triples:
            cov = [x for x in t if x in owner]
            if len(cov) == 1:
                pending.setdefault(owner[cov[0]], []).append(t)
        for T, cands in pending.items():
            if any(owner.get(x) is not T for x in T):
                continue  # T already swapped out this pass
            ok = [c for c in cands if all(owner.get(x) is None or owner[x] is T for x in c)]
            found = None
            for i in range(len(ok)):
                si = set(ok[i])
                for j in range(i + 1, len(ok)):
                    if not si.intersection(ok[j]):
                        found = (ok[i], ok[j])
                        break
                if found:
                    break
            if found:
                for x in T:
                    del owner[x]
                for c in found:
                    for x in c:
                        owner[x] = c
                swaps += 1
                improved = True
    return swaps


def nibble_matching(H, seed: int = 0, bite: float = BITE, max_rounds: int = MAX_ROUNDS,
                    augment: bool = True) -> NibbleResult:
    """Semi-random matching of a 3-uniform hypergraph.

    Each round keeps every live triple with probability bite/avg-degree and
    accepts the selected triples that meet no other selected one.  Then
    1-out/2-in swaps and a greedy pass make the result maximal.
    ``H`` is an AuxHypergraph or a plain list of triples.
    """
    if isinstance(H, AuxHypergraph):
        triples = list(H.triples)
        N = H.vertex_count
    else:
        triples = [tuple(t) for t in H]
        N = len({x for t in triples for x in t})
    rng = derive_rng(seed, "nibble")
    owner: dict[int, Triple] = {}
    live = triples
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        live = [t for t in live if t[0] not in owner and t[1] not in owner and t[2] not in owner]
        if not live:
            break
        deg: dict[int, int] = {}
        for t in live:
            for x in t:
                deg[x] = deg.get(x, 0) + 1
        avg = 3 * len(live) / len(deg)
        p = min(1.0, bite / avg)
        sel = [t for t in live if rng.random() < p]
        hits: dict[int, int] = {}
        for t in sel:
            for x in t:
                hits[x] = hits.get(x, 0) + 1
        for t in sel:
            if hits[t[0]] == 1 and hits[t[1]] == 1 and hits[t[2]] == 1:
                for x in t:
                    owner[x] = t
    swaps = _augment(triples, owner) if augment else 0
    rest = [t for t in triples if t[0] not in owner and t[1] not in owner and t[2] not in owner]
    rng.shuffle(rest)
    for t in rest:
        if t[0] not in owner and t[1] not in owner and t[2] not in owner:
            for x in t:
                owner[x] = t
    chosen = sorted(set(owner.values()))
    return NibbleResult(chosen, len(owner), N, rounds, swaps)


def is_hypergraph_matching(triples: Sequence[Triple]) -> bool:
    seen: set[int] = set()
    for t in triples:
        for x in t:
            if x in seen:
                return False
            seen.add(x)
    return True


def is_maximal(H, M: Sequence[Triple]) -> bool:
    triples = H.triples if isinstance(H, AuxHypergraph) else H
    covered = {x for t in M for x in t}
    return not any(all(x not in covered for x in t) for t in triples)


@dataclass
class ClaimResult:
    per_colour: list[list[Edge]]
    hypergraph: AuxHypergraph
    nibble: NibbleResult

    @property
    def edges(self) -> list[Edge]:
        return [e for A in self.per_colour for e in A]


def claim_matching(G: Sequence[Sequence[Edge]], m: int, seed: int = 0) -> ClaimResult:
    """Matching of G with at most m edges per colour, via the auxiliary hypergraph."""
    H = build_aux_hypergraph(G, m, seed)
    res = nibble_matching(H, seed)
    colour_of_y = {y: idx // m for idx, y in enumerate(H.y_vertices)}
    per: list[list[Edge]] = [[] for _ in range(len(G))]
    for u, v, y in res.triples:
        per[colour_of_y[y]].append((u, v))
    for i, A in enumerate(per):
        if len(A) > m:
            raise InvariantViolation(f"colour {i} got {len(A)} > {m} edges")
        A.sort()
    return ClaimResult(per, H, res)


@dataclass
class DeficitReport:
    per_colour: list[int]
    total: int
    survivors: list[int]
    bad: list[int] = field(default_factory=list)
    bad_bound: Fraction = Fraction(0)

    @property
    def bound_holds(self) -> bool:
        return len(self.bad) <= self.bad_bound or self.total == 0


def prune_deficits(M, G: Sequence[Sequence[Edge]], m: int, delta) -> DeficitReport:
    """Deficits d_i = m - |M ∩ M_i| and colours with |M ∩ M_i| >= m/(1+delta).

    ``M`` is either a flat edge list or per-colour edge lists.
    """
    delta = parse_rational(delta)
    flat = all(len(x) == 2 and isinstance(x[0], int) for x in M)
    if not flat:
        counts = [len(A) for A in M]
        size = sum(counts)
    else:
        look = {}
        for i, Mi in enumerate(G):
            for e in Mi:
                look[norm_edge(*e)] = i
        counts = [0] * len(G)
        size = 0
        for e in M:
            i = look.get(norm_edge(*e))
            if i is not None:
                counts[i] += 1
            size += 1
    if len(counts) < len(G):
        counts += [0] * (len(G) - len(counts))
    if any(c > m for c in counts):
        raise InvariantViolation("matching exceeds the per-colour cap")
    d = [m - c for c in counts]
    total = sum(d)
    if total != m * len(G) - size:
        raise InvariantViolation("deficit identity failed")
    survivors = [i for i, c in enumerate(counts) if c * (1 + delta) >= m]
    bad = [i for i, c in enumerate(counts) if c * (1 + delta) < m]
    bound = Fraction(total) * (1 + delta) / (delta * m) if delta > 0 else Fraction(math.inf)
    return DeficitReport(d, total, survivors, bad, bound)


def random_linear_hypergraph(n_x: int, degree: int, seed: int = 0) -> list[Triple]:
    """Near-regular linear 3-graph: ``degree`` random circle-method rounds on
    ``n_x`` vertices, each round cut into groups of ``degree`` edges.

    x-vertices have degree exactly ``degree``; y-vertices have degree
    ``degree`` except possibly one short group per round.
    """
    if n_x % 2 or n_x < 2:
        raise ValueError("n_x must be a positive even number")
    rng = derive_rng(seed, "linear")
    rounds = rng.sample(range(n_x - 1), degree)
    perm = list(range(n_x))
    rng.shuffle(perm)
    out: list[Triple] = []
    y = n_x
    for r in rounds:
        M = [(perm[u], perm[v]) for u, v in round_robin_matching(n_x, r)]
        rng.shuffle(M)
        for j in range(0, len(M), degree):
            for u, v in M[j:j + degree]:
                out.append((u, v, y))
            y += 1
    return out
