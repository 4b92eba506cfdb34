"""Instances, demand sequences, solutions and their verifiers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .errors import InvalidInputError
from .numeric import derive_rng, parse_rational

Edge = tuple[int, int]


def norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _as_edge(raw) -> Edge:
    try:
        u, v = raw
        u, v = int(u), int(v)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad edge {raw!r}") from exc
    return norm_edge(u, v)


@dataclass(frozen=True)
class Instance:
    """A family of perfect matchings on vertices ``0..n2-1``.

    Edges are stored min-vertex first and each matching is sorted, so two
    instances with the same edge sets compare equal.  Validity is not
    enforced here; call :func:`verify_instance`.
    """

    n2: int
    matchings: tuple[tuple[Edge, ...], ...]

    def __init__(self, n2: int, matchings: Iterable[Iterable]):
        object.__setattr__(self, "n2", int(n2))
        object.__setattr__(
            self,
            "matchings",
            tuple(tuple(sorted(_as_edge(e) for e in M)) for M in matchings),
        )

    @property
    def n(self) -> int:
        return self.n2 // 2

    @property
    def ell(self) -> int:
        return len(self.matchings)

    @cached_property
    def colour_of(self) -> dict[Edge, int]:
        """Edge -> index of the (first) matching containing it."""
        out: dict[Edge, int] = {}
        for i, M in enumerate(self.matchings):
            for e in M:
                out.setdefault(e, i)
        return out

    def to_json(self) -> dict:
        return {"n2": self.n2, "matchings": [[list(e) for e in M] for M in self.matchings]}

    @classmethod
    def from_json(cls, data) -> "Instance":
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"instance is not JSON: {exc}") from exc
        if not isinstance(data, dict) or "n2" not in data or "matchings" not in data:
            raise InvalidInputError("instance JSON needs keys 'n2' and 'matchings'")
        if not isinstance(data["matchings"], list):
            raise InvalidInputError("'matchings' must be a list")
        return cls(data["n2"], data["matchings"])

    def sub(self, indices: Sequence[int]) -> "Instance":
        return Instance(self.n2, [self.matchings[i] for i in indices])


@dataclass(frozen=True)
class DemandSequence:
    demands: tuple[int, ...]
    epsilon: Fraction = Fraction(1, 10)

    def __init__(self, demands: Iterable[int], epsilon=Fraction(1, 10)):
        ds = tuple(demands)
        if not ds:
            raise InvalidInputError("demand sequence is empty")
        for a in ds:
            if isinstance(a, bool) or int(a) != a or a < 1:
                raise InvalidInputError(f"demands must be positive integers, got {a!r}")
        eps = parse_rational(epsilon)
        if not 0 < eps < 1:
            raise InvalidInputError(f"epsilon must lie in (0,1), got {eps}")
        object.__setattr__(self, "demands", tuple(int(a) for a in ds))
        object.__setattr__(self, "epsilon", eps)

    @property
    def k(self) -> int:
        return len(self.demands)

    @property
    def total(self) -> int:
        return sum(self.demands)

    def __len__(self) -> int:
        return len(self.demands)

    def __iter__(self):
        return iter(self.demands)

    def __getitem__(self, i):
        return self.demands[i]

    def with_demands(self, demands) -> "DemandSequence":
        return DemandSequence(demands, self.epsilon)


@dataclass(frozen=True)
class Solution:
    """A matching ``edges`` together with the matchings it is scored against.

    ``counts[i]`` is ``|edges ∩ M_{chosen[i]}|`` and pairs with demand ``i``.
    """

    edges: tuple[Edge, ...]
    chosen: tuple[int, ...]
    counts: tuple[int, ...]

    def __init__(self, edges, chosen, counts):
        object.__setattr__(self, "edges", tuple(sorted(_as_edge(e) for e in edges)))
        object.__setattr__(self, "chosen", tuple(int(c) for c in chosen))
        object.__setattr__(self, "counts", tuple(int(c) for c in counts))

    @classmethod
    def from_edges(cls, inst: Instance, edges, chosen) -> "Solution":
        chosen = tuple(chosen)
        slot = {c: i for i, c in enumerate(chosen)}
        counts = [0] * len(chosen)
        for e in edges:
            c = inst.colour_of.get(_as_edge(e))
            if c in slot:
                counts[slot[c]] += 1
        return cls(edges, chosen, counts)

    def feasible(self, dem) -> bool:
        ds = list(dem)
        return len(ds) == len(self.counts) and all(c >= a for c, a in zip(self.counts, ds))

    def to_json(self) -> dict:
        return {
            "edges": [list(e) for e in self.edges],
            "chosen": list(self.chosen),
            "counts": list(self.counts),
        }

    @classmethod
    def from_json(cls, data) -> "Solution":
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"solution is not JSON: {exc}") from exc
        try:
            return cls(data["edges"], data["chosen"], data["counts"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError("solution JSON needs 'edges', 'chosen', 'counts'") from exc


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


Report = list  # list[Violation]; empty means OK


# -- generation ---------------------------------------------------------------


def round_robin_matching(n2: int, r: int) -> tuple[Edge, ...]:
    """Round ``r`` of the circle-method schedule on ``n2`` vertices."""
    m = n2 - 1
    M = [norm_edge(r, m)]
    for i in range(1, n2 // 2):
        M.append(norm_edge((r + i) % m, (r - i) % m))
    return tuple(sorted(M))


def round_robin_one_factorization(n2: int) -> Instance:
    if isinstance(n2, bool) or not isinstance(n2, int) or n2 < 2 or n2 % 2:
        raise InvalidInputError(f"n2 must be a positive even integer, got {n2!r}")
    return Instance(n2, [round_robin_matching(n2, r) for r in range(n2 - 1)])


def relabel(inst: Instance, perm: Sequence[int]) -> Instance:
    return Instance(inst.n2, [[(perm[u], perm[v]) for u, v in M] for M in inst.matchings])


def relabel_random(inst: Instance, seed: int) -> Instance:
    perm = list(range(inst.n2))
    derive_rng(seed, "relabel").shuffle(perm)
    return relabel(inst, perm)


def random_instance(n2: int, ell: int, seed: int) -> Instance:
    """``ell`` random rounds of the circle schedule under a random relabelling."""
    if ell < 1 or ell > n2 - 1:
        raise InvalidInputError(f"need 1 <= ell <= n2-1, got ell={ell}, n2={n2}")
    if n2 < 2 or n2 % 2:
        raise InvalidInputError(f"n2 must be a positive even integer, got {n2!r}")
    rng = derive_rng(seed, "instance")
    rounds = rng.sample(range(n2 - 1), ell)
    base = Instance(n2, [round_robin_matching(n2, r) for r in rounds])
    return relabel_random(base, seed)


# -- verification -------------------------------------------------------------


def verify_instance(inst: Instance) -> Report:
    out: Report = []
    n2 = inst.n2
    if n2 < 2 or n2 % 2:
        out.append(Violation("vertex-count", f"n2={n2} is not a positive even number"))
    if inst.ell < 1:
        out.append(Violation("empty", "no matchings"))
    owner: dict[Edge, int] = {}
    for i, M in enumerate(inst.matchings):
        seen: dict[int, int] = {}
        for u, v in M:
            if u == v:
                out.append(Violation("loop", f"matching {i} has loop at {u}"))
            for x in (u, v):
                if not 0 <= x < n2:
                    out.append(Violation("vertex-id", f"matching {i} uses vertex {x}"))
                seen[x] = seen.get(x, 0) + 1
            e = (u, v)
            if e in owner:
                out.append(Violation("edge-disjointness", f"edge {e} in matchings {owner[e]} and {i}"))
            else:
                owner[e] = i
        repeated = sorted(x for x, c in seen.items() if c > 1)
        missing = [x for x in range(n2) if x not in seen] if n2 > 0 else []
        if repeated:
            out.append(Violation("perfection", f"matching {i} covers {repeated[:5]} more than once"))
        if missing:
            out.append(Violation("perfection", f"matching {i} misses vertices {missing[:5]}"))
    return out


def verify_solution(inst: Instance, dem, sol: Solution) -> Report:
    out: Report = []
    ds = list(dem)
    if len(sol.chosen) != len(ds):
        out.append(Violation("arity", f"{len(sol.chosen)} chosen matchings for {len(ds)} demands"))
    if len(sol.counts) != len(sol.chosen):
        out.append(Violation("arity", "counts and chosen differ in length"))
    if len(set(sol.chosen)) != len(sol.chosen):
        out.append(Violation("chosen", "a matching is chosen twice"))
    for c in sol.chosen:
        if not 0 <= c < inst.ell:
            out.append(Violation("chosen", f"index {c} out of range"))
    used: set[int] = set()
    for u, v in sol.edges:
        if not (0 <= u < inst.n2 and 0 <= v < inst.n2) or u == v:
            out.append(Violation("vertex-id", f"bad edge {(u, v)}"))
        for x in (u, v):
            if x in used:
                out.append(Violation("not a matching", f"vertex {x} covered twice"))
            used.add(x)
    slot = {c: i for i, c in enumerate(sol.chosen)}
    real = [0] * len(sol.chosen)
    for e in sol.edges:
        c = inst.colour_of.get(e)
        if c is None or c not in slot:
            out.append(Violation("membership", f"edge {e} is in no chosen matching"))
        else:
            real[slot[c]] += 1
    if list(sol.counts) != real:
        out.append(Violation("counts", f"claimed {list(sol.counts)}, actual {real}"))
    for i, (a, c) in enumerate(zip(ds, real)):
        if c < a:
            out.append(Violation("demand", f"colour {i}: {c} < {a}"))
    return out


# -- solver result ------------------------------------------------------------


@dataclass
class SolveResult:
    """Outcome of a solver call.

    ``status`` is ``feasible``, ``infeasible`` (proved by exhaustive search)
    or ``no-solution`` (every tier gave up without a proof).
    """

    status: str
    solution: Solution | None = None
    tier: str = ""
    ell_used: int = 0
    log: list[str] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"
