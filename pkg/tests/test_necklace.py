import random

import pytest
from hypothesis import given, settings, strategies as st

from brute import fair, min_fair_cuts_two
from colourmatch.core import random_instance
from colourmatch.errors import InvalidInputError, PreconditionError
from colourmatch.necklace import Necklace, build_necklace, lift_one, split_necklace, truncate_to_divisible


def test_truncate():
    B = [(2 * i, 2 * i + 1) for i in range(11)]
    assert len(truncate_to_divisible(B, 3)) == 9
    assert truncate_to_divisible(B[:9], 3) == sorted(B[:9])
    assert truncate_to_divisible(B[:5], 7) == []
    # the highest edges are the ones dropped
    assert truncate_to_divisible(B, 3) == sorted(B)[:9]


def test_build_isolated_beads():
    N = build_necklace([[(0, 1)]], [(2, 3)])
    assert len(N) == 2
    assert N.links == ["concat"]
    assert N.colours == [0, 1]


def test_build_short_path():
    N = build_necklace([[(0, 1)]], [(1, 2)])
    assert len(N) == 2 and N.links == ["path"]
    assert N.path_starts == [0]


def test_build_four_cycle():
    N = build_necklace([[(0, 1), (2, 3)]], [(1, 2), (0, 3)])
    assert len(N) == 4
    assert N.links == ["path"] * 3
    assert len(N.closing_pairs) == 1
    a, b = N.closing_pairs[0]
    # the deleted link joined the two ends of the opened cycle
    assert (a, b) == (0, 3)
    ea, eb = N.beads[a].edge, N.beads[b].edge
    assert set(ea) & set(eb)
    # consecutive beads share a vertex
    for i in range(3):
        assert set(N.beads[i].edge) & set(N.beads[i + 1].edge)


def test_build_rejects_bad_parts():
    with pytest.raises(InvalidInputError):
        build_necklace([[(0, 1)], [(1, 2)]], [])
    with pytest.raises(InvalidInputError):
        build_necklace([[(0, 1)]], [(0, 1)])
    with pytest.raises(InvalidInputError):
        build_necklace([[(0, 1)]], [(2, 3), (3, 4)])


def test_build_paths_ordered_by_smallest_vertex():
    N = build_necklace([[(10, 11)], [(0, 1)]], [(4, 5)])
    firsts = [min(v for b in N.beads[s:e] for v in b.edge)
              for s, e in zip(N.path_starts, N.path_starts[1:] + [len(N)])]
    assert firsts == sorted(firsts)


def test_split_aaaa():
    sp = split_necklace(Necklace.from_string("AAAA"), 2)
    assert sp.cuts == [2]
    assert [sum(c.values()) for c in sp.counts] == [2, 2]


def test_split_aabb():
    sp = split_necklace(Necklace.from_string("AABB"), 2)
    assert sp.is_fair([0, 0, 1, 1])
    assert len(sp.cuts) <= 2
    assert len(sp.cuts) == min_fair_cuts_two([0, 0, 1, 1], 2) == 2


def test_split_one_thief():
    sp = split_necklace(Necklace.from_string("ABCAB"), 1)
    assert sp.cuts == [] and sp.owner == [0]


def test_split_requires_divisible_counts():
    with pytest.raises(PreconditionError):
        split_necklace(Necklace.from_string("AAB"), 2)


def test_split_heuristic_tier():
    rng = random.Random(4)
    cols = [c for c in range(8) for _ in range(4)]
    rng.shuffle(cols)
    sp = split_necklace(cols, 4)
    assert not sp.exact
    assert sp.is_fair(cols)
    assert fair(cols, sp.thief_of_bead(), 4)
    assert len(sp.cuts) <= 3 * 8


def test_split_long_necklace_heuristic():
    rng = random.Random(9)
    cols = [c for c in range(3) for _ in range(40)]
    rng.shuffle(cols)
    sp = split_necklace(cols, 2)
    assert fair(cols, sp.thief_of_bead(), 2) and len(sp.cuts) <= 3


def test_from_string_letters_only():
    with pytest.raises(InvalidInputError):
        Necklace.from_string("AB1")


# -- lifts ----------------------------------------------------------------------


def base_classes(inst, t, rng, keep=0.7):
    used, out = set(), []
    for i in range(t):
        A = []
        for e in inst.matchings[i]:
            if e[0] not in used and e[1] not in used and rng.random() < keep:
                A.append(e)
                used.update(e)
        out.append(A)
    return out


def recount_conflicts(res, t, p):
    owner = res.split.thief_of_bead()
    kept_old, fresh = {}, []
    for bead, th in zip(res.necklace.beads, owner):
        if bead.colour < t and th >= p:
            for x in bead.edge:
                kept_old[x] = bead.edge
        elif bead.colour == t and th < p:
            fresh.append(bead.edge)
    return sum(1 for e in fresh for x in e if x in kept_old)


def test_lift_disjoint_half():
    B1 = [(0, 1), (2, 3), (4, 5), (6, 7)]
    M2 = [(8, 9), (10, 11), (12, 13), (14, 15), (16, 17), (18, 19)]
    res = lift_one([B1], M2, 1, 2)
    assert res.conflicts == []
    assert len(res.classes[1]) == len(M2) // 2
    assert len(res.classes[0]) == len(B1) // 2


def test_lift_random_postconditions():
    rng = random.Random(0)
    inst = random_instance(20, 3, 7)
    B = base_classes(inst, 2, rng)
    p, q, t = 1, 4, 2
    res = lift_one(B, inst.matchings[2], p, q)
    bs = [len(A) for A in B]
    for i in range(t):
        assert len(res.classes[i]) * q == (q - p) * res.truncated_sizes[i]
        assert len(res.classes[i]) >= (1 - p / q) * bs[i] - q
        assert set(res.classes[i]) <= set(B[i])
    assert len(res.conflicts) == recount_conflicts(res, t, p)
    assert len(res.conflicts) <= 2 * (q - 1) * (t + 1)
    assert len(res.classes[t]) >= p / q * len(inst.matchings[2]) - 3 * (t + 1) * q
    seen = set()
    for A in res.classes:
        for e in A:
            assert not set(e) & seen
            seen.update(e)


def test_lift_conflict_free_keeps_all_new():
    B1 = [(0, 1)]
    M = [(2, 3), (4, 5)]
    res = lift_one([B1], M, 1, 2)
    assert res.conflicts == []
    owner = res.split.thief_of_bead()
    kept = sorted(b.edge for b, th in zip(res.necklace.beads, owner) if b.colour == 1 and th < 1)
    assert res.classes[1] == kept


def test_lift_bad_pq():
    with pytest.raises(PreconditionError):
        lift_one([[(0, 1)]], [(2, 3)], 2, 2)


# -- properties -------------------------------------------------------------------


@st.composite
def divisible_necklace(draw):
    q = draw(st.integers(2, 4))
    k = draw(st.integers(1, 4))
    mult = draw(st.lists(st.integers(1, 3), min_size=k, max_size=k))
    cols = [c for c in range(k) for _ in range(q * mult[c])]
    perm = draw(st.permutations(cols))
    return list(perm), q


@settings(max_examples=60, deadline=None)
@given(divisible_necklace())
def test_split_fair_and_bounded(case):
    cols, q = case
    sp = split_necklace(cols, q)
    assert fair(cols, sp.thief_of_bead(), q)
    assert len(sp.cuts) <= (q - 1) * len(set(cols))
    assert sorted(a for a, _ in sp.pieces)[0] == 0
    assert sum(b - a for a, b in sp.pieces) == len(cols)


@settings(max_examples=40, deadline=None)
@given(n2=st.integers(4, 20).map(lambda x: 2 * x), t=st.integers(1, 3), q=st.integers(2, 4),
       seed=st.integers(0, 10**6), data=st.data())
def test_lift_invariants(n2, t, q, seed, data):
    p = data.draw(st.integers(1, q - 1))
    rng = random.Random(seed)
    inst = random_instance(n2, t + 1, seed)
    B = base_classes(inst, t, rng, keep=data.draw(st.floats(0.2, 1.0)))
    res = lift_one(B, inst.matchings[t], p, q)
    assert len(res.conflicts) <= 2 * (q - 1) * (t + 1)
    assert len(res.conflicts) == recount_conflicts(res, t, p)
    assert all(c.kind in (1, 2) for c in res.conflicts)
    assert len(res.split.cuts) <= (q - 1) * (t + 1)
    seen = set()
    for A in res.classes:
        for e in A:
            assert not set(e) & seen
            seen.update(e)
