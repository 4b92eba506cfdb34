"""Steiner triple systems and embedding of turkeys into them.

A turkey is a small core hypertree with disjoint hyperstars hung off some of
its vertices.  The core is embedded greedily.  Each star centre u_i then
defines a perfect matching: its link {u, v : {u_i, u, v} in S}, plus an edge
to one padding vertex.  A colourful matching across these links picks the
stars' leaf pairs.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .core import DemandSequence, Edge, Instance, Solution, norm_edge
from .errors import EmbeddingFailure, InvalidInputError, InvariantViolation, PreconditionError
from .numeric import derive_seed, parse_rational

EMBED_RETRIES = 10

Triple = tuple[int, int, int]


def _tri(a, b, c) -> Triple:
    return tuple(sorted((a, b, c)))


@dataclass(frozen=True)
class SteinerTripleSystem:
    order: int
    triples: tuple[Triple, ...]

    def __init__(self, order: int, triples):
        object.__setattr__(self, "order", int(order))
        object.__setattr__(self, "triples", tuple(sorted(_tri(*t) for t in triples)))

    def pair_index(self) -> dict[Edge, Triple]:
        out = {}
        for t in self.triples:
            for a, b in itertools.combinations(t, 2):
                out[(a, b)] = t
        return out

    def third(self, a: int, b: int) -> int:
        t = self._pairs[norm_edge(a, b)]
        return next(x for x in t if x != a and x != b)

    @property
    def _pairs(self):
        cache = self.__dict__.get("_pair_cache")
        if cache is None:
            cache = self.pair_index()
            object.__setattr__(self, "_pair_cache", cache)
        return cache

    def through(self, u: int) -> list[Triple]:
        return [t for t in self.triples if u in t]

    def violations(self) -> list[str]:
        out = []
        v = self.order
        if v % 6 not in (1, 3):
            out.append(f"order {v} is not 1 or 3 mod 6")
        seen: dict[Edge, int] = {}
        for t in self.triples:
            if len(set(t)) != 3 or not all(0 <= x < v for x in t):
                out.append(f"bad triple {t}")
                continue
            for p in itertools.combinations(t, 2):
                seen[p] = seen.get(p, 0) + 1
        for p in itertools.combinations(range(v), 2):
            c = seen.get(p, 0)
            if c != 1:
                out.append(f"pair {p} covered {c} times")
        return out

    def to_json(self) -> dict:
        return {"order": self.order, "triples": [list(t) for t in self.triples]}

    @classmethod
    def from_json(cls, data) -> "SteinerTripleSystem":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            triples = data["triples"]
            order = data.get("order")
        except (TypeError, KeyError, AttributeError) as exc:
            raise InvalidInputError("STS JSON needs 'triples'") from exc
        if order is None:
            order = 1 + max(x for t in triples for x in t)
        return cls(order, triples)


def bose_sts(m: int) -> SteinerTripleSystem:
    """Order 6m+3 from the idempotent commutative quasigroup on Z_{2m+1}."""
    if m < 0:
        raise PreconditionError("m must be non-negative")
    N = 2 * m + 1

    def op(x, y):
        return ((x + y) * (m + 1)) % N

    def vid(x, i):
        return x + N * i

    tri = [(vid(x, 0), vid(x, 1), vid(x, 2)) for x in range(N)]
    for i in range(3):
        for x, y in itertools.combinations(range(N), 2):
            tri.append((vid(x, i), vid(y, i), vid(op(x, y), (i + 1) % 3)))
    return SteinerTripleSystem(6 * m + 3, tri)


def skolem_sts(m: int) -> SteinerTripleSystem:
    """Order 6m+1 from the half-idempotent commutative quasigroup on Z_{2m}."""
    if m < 1:
        raise PreconditionError("m must be at least 1")
    N = 2 * m
    inf = 6 * m

    def op(x, y):
        s = (x + y) % N
        return s // 2 if s % 2 == 0 else m + s // 2

    def vid(x, i):
        return x + N * i

    tri = [(vid(x, 0), vid(x, 1), vid(x, 2)) for x in range(m)]
    for i in range(3):
        for x in range(m):
            tri.append((inf, vid(x + m, i), vid(x, (i + 1) % 3)))
        for x, y in itertools.combinations(range(N), 2):
            tri.append((vid(x, i), vid(y, i), vid(op(x, y), (i + 1) % 3)))
    return SteinerTripleSystem(6 * m + 1, tri)


def sts_of_order(v: int) -> SteinerTripleSystem:
    if v % 6 == 3:
        return bose_sts((v - 3) // 6)
    if v % 6 == 1 and v >= 7:
        return skolem_sts((v - 1) // 6)
    raise PreconditionError(f"no Steiner triple system of order {v}")


# -- turkeys --------------------------------------------------------------------


@dataclass(frozen=True)
class Turkey:
    core: tuple[Triple, ...]
    centers: tuple[int, ...]
    star_sizes: tuple[int, ...]

    def __init__(self, core, centers, star_sizes):
        object.__setattr__(self, "core", tuple(tuple(int(x) for x in t) for t in core))
        object.__setattr__(self, "centers", tuple(int(c) for c in centers))
        object.__setattr__(self, "star_sizes", tuple(int(a) for a in star_sizes))
        problems = self.violations()
        if problems:
            raise InvalidInputError("; ".join(problems))

    @property
    def core_vertices(self) -> list[int]:
        vs = {x for t in self.core for x in t} | set(self.centers)
        return sorted(vs)

    @property
    def c(self) -> int:
        return len(self.core_vertices)

    @property
    def size(self) -> int:
        """Number of hyperedges; the turkey has 2*size+1 vertices."""
        return len(self.core) + sum(self.star_sizes)

    def violations(self) -> list[str]:
        out = []
        if len(self.centers) != len(self.star_sizes):
            out.append("centers and starSizes differ in length")
        if len(set(self.centers)) != len(self.centers):
            out.append("centers are not distinct")
        if any(a < 1 for a in self.star_sizes):
            out.append("star sizes must be positive")
        for t in self.core:
            if len(t) != 3 or len(set(t)) != 3:
                out.append(f"core hyperedge {t} is not a triple")
                return out
        vs = self.core_vertices
        if not vs:
            out.append("turkey has no core vertex")
            return out
        if 2 * len(self.core) != len(vs) - 1:
            out.append(f"core has {len(self.core)} triples on {len(vs)} vertices; not a hypertree")
        pairs = set()
        for t in self.core:
            for p in itertools.combinations(sorted(t), 2):
                if p in pairs:
                    out.append("core is not simple")
                pairs.add(p)
        adj: dict[int, set[int]] = {v: set() for v in vs}
        for t in self.core:
            for x in t:
                adj[x].update(t)
        seen = {vs[0]}
        todo = [vs[0]]
        while todo:
            x = todo.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        if len(seen) != len(vs):
            out.append("core is not connected")
        return out

    def leaf_ids(self) -> list[list[tuple[int, int]]]:
        """Turkey vertex ids of star leaves: per star, one pair per hyperedge."""
        nxt = max(self.core_vertices) + 1
        out = []
        for a in self.star_sizes:
            pairs = []
            for _ in range(a):
                pairs.append((nxt, nxt + 1))
                nxt += 2
            out.append(pairs)
        return out

    def hyperedges(self) -> list[Triple]:
        edges = [tuple(t) for t in self.core]
        for v, pairs in zip(self.centers, self.leaf_ids()):
            edges.extend((v, x, y) for x, y in pairs)
        return edges

    def to_json(self) -> dict:
        return {"core": [list(t) for t in self.core], "centers": list(self.centers),
                "starSizes": list(self.star_sizes)}

    @classmethod
    def from_json(cls, data) -> "Turkey":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(data["core"], data["centers"], data["starSizes"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError("turkey JSON needs 'core', 'centers', 'starSizes'") from exc


@dataclass
class Embedding:
    vertex_map: dict[int, int]
    used_triples: list[Triple]
    log: list[str] = field(default_factory=list)
    seed: int = 0

    def to_json(self) -> dict:
        return {"vertexMap": {str(k): v for k, v in sorted(self.vertex_map.items())},
                "usedTriples": [list(t) for t in self.used_triples]}


def greedy_embed_hypertree(S: SteinerTripleSystem, core: Sequence[Sequence[int]], root: int | None = None,
                           rng=None) -> dict[int, int]:
    """Embed a hypertree triple by triple in BFS order from ``root``.

    Each new triple {parent, x, y} goes to an STS triple through the image of
    parent whose other two vertices are still unused.
    """
    core = [tuple(t) for t in core]
    vs = sorted({x for t in core for x in t} | ({root} if root is not None else set()))
    if not vs:
        return {}
    if len(vs) > (S.order + 1) // 2:
        raise PreconditionError(f"hypertree on {len(vs)} vertices exceeds greedy headroom {(S.order + 1) // 2}")
    root = vs[0] if root is None else root
    start = 0 if rng is None else rng.randrange(S.order)
    vmap = {root: start}
    used = {start}
    through: dict[int, list[Triple]] = {}
    for t in S.triples:
        for x in t:
            through.setdefault(x, []).append(t)
    by_vertex: dict[int, list[int]] = {}
    for i, t in enumerate(core):
        for x in t:
            by_vertex.setdefault(x, []).append(i)
    done = set()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for i in by_vertex.get(u, []):
            if i in done:
                continue
            done.add(i)
            rest = [x for x in core[i] if x != u]
            if any(x in vmap for x in rest):
                raise PreconditionError("core contains a cycle")
            cands = [t for t in through[vmap[u]] if all(x == vmap[u] or x not in used for x in t)]
            if not cands:
                raise EmbeddingFailure(f"no free triple through image of {u}")
            t = cands[0] if rng is None else rng.choice(cands)
            img = [x for x in t if x != vmap[u]]
            for x, y in zip(rest, img):
                vmap[x] = y
                used.add(y)
                queue.append(x)
    if len(done) != len(core):
        raise PreconditionError("core is not connected")
    return vmap


@dataclass
class StarMatchings:
    instance: Instance
    fake: list[set[Edge]]
    w: int


def stars_to_matchings(S: SteinerTripleSystem, centers: Sequence[int], core_image) -> StarMatchings:
    """Link matchings of the centres on V(S) plus a padding vertex w."""
    if len(set(centers)) != len(centers):
        raise PreconditionError("centres must be distinct")
    w = S.order
    core_image = set(core_image)
    ms, fakes = [], []
    for u in centers:
        M = [norm_edge(*(x for x in t if x != u)) for t in S.through(u)]
        M.append(norm_edge(u, w))
        fake = {e for e in M if e == norm_edge(u, w) or e[0] in core_image or e[1] in core_image}
        ms.append(M)
        fakes.append(fake)
    inst = Instance(S.order + 1, ms)
    for i, F in enumerate(fakes):
        if len(F) > len(core_image):
            raise InvariantViolation(f"matching {i} has {len(F)} fake edges")
    return StarMatchings(inst, fakes, w)


def rescaled_demands(sizes: Sequence[int], n: int, n_prime: int, epsilon) -> list[int]:
    eps = parse_rational(epsilon)
    f = (1 + eps / 2) * n_prime / ((1 + eps) * n)
    return [math.ceil(f * a) for a in sizes]


def verify_embedding(S: SteinerTripleSystem, T: Turkey, emb: Embedding) -> list[str]:
    out = []
    vm = emb.vertex_map
    if len(set(vm.values())) != len(vm):
        out.append("vertex map is not injective")
    pairs = S._pairs
    for e in T.hyperedges():
        if not all(x in vm for x in e):
            out.append(f"hyperedge {e} not fully mapped")
            continue
        img = _tri(*(vm[x] for x in e))
        a, b, _ = img
        if len(set(img)) != 3 or pairs.get((a, b)) != img:
            out.append(f"image {img} of {e} is not a triple")
    if len(vm) != 2 * T.size + 1:
        out.append(f"map has {len(vm)} vertices, turkey has {2 * T.size + 1}")
    return out


def embed_turkey(S: SteinerTripleSystem, T: Turkey, epsilon, seed: int = 0,
                 retries: int = EMBED_RETRIES, solver=None) -> Embedding:
    """Embed the core greedily, then grow the stars from a colourful matching.

    The star demands are scaled up to pay for the edges dropped near the core.
    After a shortfall, the next attempt raises the short colours by the amount
    they missed.
    """
    eps = parse_rational(epsilon)
    n = T.size
    if sum(T.star_sizes) > n:
        raise PreconditionError("star sizes exceed the turkey size")
    if S.order < 2 * (1 + eps) * n:
        raise PreconditionError(f"STS order {S.order} below 2(1+eps)n={float(2 * (1 + eps) * n):.4g}")
    if solver is None:
        from .solver import solve as solver
    log: list[str] = []
    root = min(T.centers)
    core_map = greedy_embed_hypertree(S, T.core, root=root)
    core_img = set(core_map.values())
    cimg = [core_map[v] for v in T.centers]
    sm = stars_to_matchings(S, cimg, core_img)
    n_prime = sm.instance.n
    demands = rescaled_demands(T.star_sizes, n, n_prime, eps)
    eps2 = eps / (2 * (1 + eps))
    k = len(T.centers)
    ident = list(range(k))
    for attempt in range(retries):
        s = derive_seed(seed, "embed", attempt)
        capped = [min(a, n_prime) for a in demands]
        if sum(capped) > n_prime:
            log.append(f"attempt {attempt}: scaled demands {sum(capped)} exceed n'={n_prime}")
            break
        dem = DemandSequence(capped, eps2)
        res = solver(sm.instance, dem, seed=s, chosen=ident)
        if not res.feasible:
            log.append(f"attempt {attempt}: solver {res.status}")
            continue
        sol = Solution.from_edges(sm.instance, res.solution.edges, ident)
        A = []
        short = []
        for i in range(k):
            Mi = set(sm.instance.matchings[i])
            real = sorted(e for e in sol.edges if e in Mi and e not in sm.fake[i])
            if len(real) < T.star_sizes[i]:
                short.append((i, T.star_sizes[i] - len(real)))
            A.append(real[: T.star_sizes[i]])
        if short:
            for i, d in short:
                demands[i] += d
            log.append(f"attempt {attempt}: short colours {short}, demands raised")
            continue
        vmap = dict(core_map)
        used = []
        for t in T.core:
            used.append(_tri(*(core_map[x] for x in t)))
        for i, (v, pairs) in enumerate(zip(T.centers, T.leaf_ids())):
            u = core_map[v]
            for (x, y), (a, b) in zip(pairs, A[i]):
                vmap[x] = a
                vmap[y] = b
                used.append(_tri(u, a, b))
        emb = Embedding(vmap, used, log + [f"attempt {attempt}: embedded via {res.tier}"], s)
        bad = verify_embedding(S, T, emb)
        if bad:
            raise InvariantViolation(f"embedding failed verification: {bad[0]}")
        return emb
    raise EmbeddingFailure(f"no embedding after {retries} attempts: {'; '.join(log[-3:])}")
