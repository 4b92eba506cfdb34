"""Discrete necklace splitting and the one-matching lift built on it.

A lift takes vertex-disjoint edge classes B_1..B_t and one extra perfect
matching.  It returns t+1 vertex-disjoint classes: each old class keeps a
(1 - p/q) share of its edges, and the new class takes about a p/q share of
everything.  Old and new edges form paths and cycles.  These become one
bead string, which is split fairly between q thieves.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Sequence

from .core import Edge, norm_edge
from .errors import InvalidInputError, InvariantViolation, PreconditionError, SplitNotFound

MAX_EXACT_COLOURS = 6
MAX_EXACT_BEADS = 60
MAX_EXACT_Q = 3
HEURISTIC_NODES = 400_000


@dataclass(frozen=True)
class Bead:
    colour: int
    edge: Edge | None = None


@dataclass
class Necklace:
    beads: list[Bead]
    links: list[str]                 # links[i] joins bead i and i+1: "path" or "concat"
    path_starts: list[int]           # index of the first bead of every path
    closing_pairs: list[tuple[int, int]] = field(default_factory=list)  # bead pairs of cut cycle links

    @classmethod
    def from_colours(cls, colours: Sequence[int]) -> "Necklace":
        cs = list(colours)
        return cls([Bead(c) for c in cs], ["path"] * max(0, len(cs) - 1), [0] if cs else [])

    @classmethod
    def from_string(cls, text: str) -> "Necklace":
        text = text.strip()
        if not text or not all(ch.isalpha() for ch in text):
            raise InvalidInputError(f"bead string must be letters, got {text!r}")
        letters = sorted(set(text))
        code = {ch: i for i, ch in enumerate(letters)}
        return cls.from_colours([code[ch] for ch in text])

    @property
    def colours(self) -> list[int]:
        return [b.colour for b in self.beads]

    def colour_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for b in self.beads:
            out[b.colour] = out.get(b.colour, 0) + 1
        return out

    def __len__(self):
        return len(self.beads)


@dataclass
class Split:
    q: int
    cuts: list[int]                  # cut at i means between bead i-1 and bead i
    pieces: list[tuple[int, int]]    # half-open bead ranges
    owner: list[int]                 # thief of every piece
    counts: list[dict[int, int]]     # per thief: colour -> beads
    exact: bool = True

    def thief_of_bead(self) -> list[int]:
        out = []
        for (a, b), th in zip(self.pieces, self.owner):
            out.extend([th] * (b - a))
        return out

    def is_fair(self, necklace) -> bool:
        cols = necklace.colours if isinstance(necklace, Necklace) else list(necklace)
        total: dict[int, int] = {}
        for c in cols:
            total[c] = total.get(c, 0) + 1
        got = [dict() for _ in range(self.q)]
        for c, th in zip(cols, self.thief_of_bead()):
            got[th][c] = got[th].get(c, 0) + 1
        return all(got[th].get(c, 0) * self.q == cnt for th in range(self.q) for c, cnt in total.items())


def truncate_to_divisible(B: Sequence[Edge], q: int) -> list[Edge]:
    """Drop the |B| mod q highest edges."""
    if q < 1:
        raise PreconditionError(f"q must be positive, got {q}")
    edges = sorted(norm_edge(*e) for e in B)
    return edges[: len(edges) - len(edges) % q]


# -- construction --------------------------------------------------------------


def build_necklace(old_parts: Sequence[Sequence[Edge]], new_part: Sequence[Edge]) -> Necklace:
    """Bead string from the line graph of old ∪ new edges.

    Old class i gives colour i; new edges get colour len(old_parts).  Each
    cycle loses its lexicographically smallest line-graph edge.  Paths are
    concatenated in order of their smallest vertex.
    """
    t = len(old_parts)
    colour: dict[Edge, int] = {}
    old_at: dict[int, Edge] = {}
    for i, part in enumerate(old_parts):
        for e in part:
            e = norm_edge(*e)
            for x in e:
                if x in old_at:
                    raise InvalidInputError(f"old classes share vertex {x}")
                old_at[x] = e
            colour[e] = i
    new_at: dict[int, Edge] = {}
    for e in new_part:
        e = norm_edge(*e)
        if e in colour:
            raise InvalidInputError(f"edge {e} is both old and new")
        for x in e:
            if x in new_at:
                raise InvalidInputError(f"new part is not a matching at vertex {x}")
            new_at[x] = e
        colour[e] = t

    def neighbours(e: Edge) -> list[Edge]:
        side = new_at if colour[e] < t else old_at
        out = []
        for x in e:
            f = side.get(x)
            if f is not None and f not in out:
                out.append(f)
        return out

    seen: set[Edge] = set()
    comps = []
    for e in sorted(colour):
        if e in seen:
            continue
        comp = []
        stack = [e]
        seen.add(e)
        while stack:
            f = stack.pop()
            comp.append(f)
            for g in neighbours(f):
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        comps.append(comp)

    sequences = []
    closing: list[tuple[Edge, Edge]] = []
    for comp in comps:
        adj = {e: set(neighbours(e)) for e in comp}
        ends = sorted(e for e in comp if len(adj[e]) <= 1)
        if ends:
            start = ends[0]
        else:
            a, b = min(tuple(sorted((e, f))) for e in comp for f in adj[e])
            adj[a].discard(b)
            adj[b].discard(a)
            closing.append((a, b))
            start = a
        order = [start]
        prev, cur = None, start
        while True:
            nxt = [g for g in adj[cur] if g != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            order.append(cur)
        if len(order) != len(comp):
            raise InvariantViolation("line graph component is not a path or cycle")
        sequences.append((min(x for e in comp for x in e), order))
    sequences.sort()

    beads: list[Bead] = []
    links: list[str] = []
    starts: list[int] = []
    pos: dict[Edge, int] = {}
    for _, order in sequences:
        if beads:
            links.append("concat")
        starts.append(len(beads))
        for i, e in enumerate(order):
            if i:
                links.append("path")
            pos[e] = len(beads)
            beads.append(Bead(colour[e], e))
    pairs = [tuple(sorted((pos[a], pos[b]))) for a, b in closing]
    return Necklace(beads, links, starts, pairs)


# -- splitting -----------------------------------------------------------------


class _Search:
    def __init__(self, cols: list[int], q: int, node_limit: int | None):
        self.cols = cols
        self.q = q
        palette = sorted(set(cols))
        self.idx = {c: i for i, c in enumerate(palette)}
        self.nc = len(palette)
        tot = [0] * self.nc
        for c in cols:
            tot[self.idx[c]] += 1
        self.target = [x // q for x in tot]
        self.codes = [self.idx[c] for c in cols]
        self.failed: dict = {}
        self.nodes = 0
        self.node_limit = node_limit
        self.assign: list[int] = []

    def run(self, limit: int) -> list[int] | None:
        self.assign = []
        counts = [0] * (self.q * self.nc)
        if not self.cols:
            return []
        c0 = self.codes[0]
        if self.target[c0] == 0:
            return None
        counts[c0] += 1
        self.assign.append(0)
        ok = self._dfs(1, 0, counts, limit, 1)
        return list(self.assign) if ok else None

    def _dfs(self, pos: int, cur: int, counts: list[int], cuts_left: int, used: int) -> bool:
        if pos == len(self.codes):
            return True
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise _Budget()
        key = (pos, cur, tuple(counts))
        if self.failed.get(key, -1) >= cuts_left:
            return False
        c = self.codes[pos]
        nc = self.nc
        tgt = self.target[c]
        if counts[cur * nc + c] < tgt:
            counts[cur * nc + c] += 1
            self.assign.append(cur)
            if self._dfs(pos + 1, cur, counts, cuts_left, used):
                return True
            self.assign.pop()
            counts[cur * nc + c] -= 1
        if cuts_left > 0:
            for th in range(min(self.q, used + 1)):
                if th == cur or counts[th * nc + c] >= tgt:
                    continue
                counts[th * nc + c] += 1
                self.assign.append(th)
                if self._dfs(pos + 1, th, counts, cuts_left - 1, max(used, th + 1)):
                    return True
                self.assign.pop()
                counts[th * nc + c] -= 1
        self.failed[key] = max(self.failed.get(key, -1), cuts_left)
        return False


class _Budget(Exception):
    pass


def _to_split(cols: list[int], assign: list[int], q: int, exact: bool) -> Split:
    cuts, pieces, owner = [], [], []
    start = 0
    for i in range(1, len(assign) + 1):
        if i == len(assign) or assign[i] != assign[i - 1]:
            pieces.append((start, i))
            owner.append(assign[i - 1])
            if i < len(assign):
                cuts.append(i)
            start = i
    counts = [dict() for _ in range(q)]
    for c, th in zip(cols, assign):
        counts[th][c] = counts[th].get(c, 0) + 1
    return Split(q, cuts, pieces, owner, counts, exact)


def split_necklace(N, q: int, max_colours: int = MAX_EXACT_COLOURS, max_beads: int = MAX_EXACT_BEADS,
                   max_q: int = MAX_EXACT_Q, node_limit: int = HEURISTIC_NODES) -> Split:
    """Fair split among q thieves with at most (q-1)*colours cuts.

    Within the caps the search is exhaustive and returns a split with the
    fewest cuts.  Above them a node-limited depth-first sweep tries the
    bound directly and gives up with SplitNotFound.
    """
    cols = N.colours if isinstance(N, Necklace) else list(N)
    if q < 1:
        raise PreconditionError(f"q must be positive, got {q}")
    counts: dict[int, int] = {}
    for c in cols:
        counts[c] = counts.get(c, 0) + 1
    bad = {c: v for c, v in counts.items() if v % q}
    if bad:
        raise PreconditionError(f"colour counts {bad} not divisible by q={q}")
    if q == 1 or not cols:
        return _to_split(cols, [0] * len(cols), q, True)
    bound = (q - 1) * len(counts)
    exact = len(counts) <= max_colours and len(cols) <= max_beads and q <= max_q
    old_limit = sys.getrecursionlimit()
    if len(cols) + 200 > old_limit:
        sys.setrecursionlimit(len(cols) + 200)
    try:
        search = _Search(cols, q, None if exact else node_limit)
        if exact:
            for L in range(bound + 1):
                assign = search.run(L)
                if assign is not None:
                    return _to_split(cols, assign, q, True)
            raise InvariantViolation("exhaustive search found no split within the cut bound")
        try:
            assign = search.run(bound)
        except _Budget:
            assign = None
    finally:
        sys.setrecursionlimit(old_limit)
    if assign is None:
        raise SplitNotFound(f"no fair split found for {len(cols)} beads, q={q} within node budget")
    sp = _to_split(cols, assign, q, False)
    if not sp.is_fair(cols) or len(sp.cuts) > bound:
        raise SplitNotFound("heuristic split failed certification")
    return sp


# -- lift ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictPair:
    new_edge: Edge
    old_edge: Edge
    kind: int          # 1: consecutive beads on a path; 2: ends of a cut-open cycle


@dataclass
class LiftResult:
    classes: list[list[Edge]]         # t old classes then the new one
    necklace: Necklace
    split: Split
    conflicts: list[ConflictPair]
    truncated_sizes: list[int]        # b'_1..b'_t, b'_{t+1}
    p: int
    q: int

    @property
    def conflict_bound(self) -> int:
        return 2 * (self.q - 1) * len(self.classes)


def lift_one(base: Sequence[Sequence[Edge]], extra: Sequence[Edge], p: int, q: int, **split_kw) -> LiftResult:
    """Add one colour class drawn from ``extra`` to vertex-disjoint ``base`` classes.

    Thieves 0..p-1 take the new colour, thieves p..q-1 keep the old ones.
    """
    if not 0 < p < q:
        raise PreconditionError(f"need 0 < p < q, got p={p}, q={q}")
    t = len(base)
    olds = [truncate_to_divisible(B, q) for B in base]
    new = truncate_to_divisible(extra, q)
    neck = build_necklace(olds, new)
    split = split_necklace(neck, q, **split_kw)
    owner = split.thief_of_bead()
    classes: list[list[Edge]] = [[] for _ in range(t)]
    fresh: list[tuple[int, Edge]] = []
    for i, (bead, th) in enumerate(zip(neck.beads, owner)):
        if bead.colour < t and th >= p:
            classes[bead.colour].append(bead.edge)
        elif bead.colour == t and th < p:
            fresh.append((i, bead.edge))
    for i, A in enumerate(classes):
        if len(A) * q != (q - p) * len(olds[i]):
            raise InvariantViolation(f"old class {i} size {len(A)} is not its fair share")
    if len(fresh) * q != p * len(new):
        raise InvariantViolation("new class size is not its fair share")

    kept_old: dict[int, tuple[int, Edge]] = {}
    pos_of = {b.edge: i for i, b in enumerate(neck.beads)}
    for A in classes:
        for e in A:
            for x in e:
                kept_old[x] = (pos_of[e], e)
    closing = set(neck.closing_pairs)
    conflicts: list[ConflictPair] = []
    drop: set[Edge] = set()
    for i, e in fresh:
        for x in e:
            hit = kept_old.get(x)
            if hit is None:
                continue
            j, f = hit
            a, b = min(i, j), max(i, j)
            if b == a + 1 and neck.links[a] == "path":
                kind = 1
            elif (a, b) in closing:
                kind = 2
            else:
                raise InvariantViolation(f"conflict between beads {a} and {b} is unclassified")
            conflicts.append(ConflictPair(e, f, kind))
            drop.add(e)
    bound = 2 * (q - 1) * (t + 1)
    if len(conflicts) > bound:
        raise InvariantViolation(f"{len(conflicts)} conflict pairs exceed bound {bound}")
    new_class = sorted(e for _, e in fresh if e not in drop)
    classes = [sorted(A) for A in classes] + [new_class]
    seen: set[int] = set()
    for A in classes:
        for e in A:
            for x in e:
                if x in seen:
                    raise InvariantViolation(f"lifted classes share vertex {x}")
                seen.add(x)
    return LiftResult(classes, neck, split, conflicts, [len(o) for o in olds] + [len(new)], p, q)
