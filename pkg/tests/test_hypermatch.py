import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from colourmatch.core import random_instance
from colourmatch.errors import GroupUnderflowError, InvariantViolation
from colourmatch.hypermatch import (build_aux_hypergraph, claim_matching, is_hypergraph_matching, is_maximal,
                                    nibble_matching, prune_deficits, random_linear_hypergraph)


def random_graph(b, size, seed):
    """b disjoint matchings of ``size`` edges each on 2*size vertices."""
    inst = random_instance(2 * size, b, seed)
    return [list(M) for M in inst.matchings]


def test_aux_forced_group_sizes():
    G = [[(0, 1), (2, 3), (4, 5), (6, 7)]]
    H = build_aux_hypergraph(G, 2, seed=0)
    assert len(H.y_vertices) == 2
    assert len(H.triples) == 4
    deg = H.degrees()
    assert sorted(deg[y] for y in H.y_vertices) == [2, 2]
    assert H.vertex_count == 10


def test_aux_single_group_degree():
    G = random_graph(4, 9, 1)
    H = build_aux_hypergraph(G, 1)
    deg = H.degrees()
    for i in range(4):
        assert deg[H.y_of(i, 0)] == len(G[i])


def test_aux_underflow():
    with pytest.raises(GroupUnderflowError):
        build_aux_hypergraph([[(0, 1)]], 2)


def test_aux_random_linear():
    G = random_graph(5, 12, 3)
    H = build_aux_hypergraph(G, 3, seed=4)
    assert H.is_linear()
    assert len(set(H.group_of)) == 15


def test_nibble_single_and_disjoint():
    assert nibble_matching([(0, 1, 2)]).triples == [(0, 1, 2)]
    disjoint = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(10)]
    res = nibble_matching(disjoint, seed=5)
    assert sorted(res.triples) == disjoint
    assert res.fraction == 1.0


def test_nibble_maximal_and_valid():
    H = random_linear_hypergraph(200, 8, seed=2)
    res = nibble_matching(H, seed=2)
    assert is_hypergraph_matching(res.triples)
    assert is_maximal(H, res.triples)
    assert res.covered == 3 * len(res.triples)


def test_random_linear_hypergraph_shape():
    H = random_linear_hypergraph(100, 6, seed=0)
    deg = {}
    for t in H:
        for x in t:
            deg[x] = deg.get(x, 0) + 1
    assert all(deg[x] == 6 for x in range(100))
    assert all(d <= 6 for d in deg.values())
    seen = set()
    for a, b, c in H:
        for p in ((a, b), (a, c), (b, c)):
            p = tuple(sorted(p))
            assert p not in seen
            seen.add(p)


def test_claim_full_when_m_is_size():
    G = [[(0, 1), (2, 3), (4, 5)], [(6, 7), (8, 9), (10, 11)], [(12, 13), (14, 15), (16, 17)]]
    res = claim_matching(G, 3)
    assert sorted(res.edges) == sorted(e for M in G for e in M)
    G2 = [[(0, 1), (2, 3)], [(4, 5), (6, 7)]]
    res = claim_matching(G2, 2)
    assert [len(A) for A in res.per_colour] == [2, 2]


def test_claim_quality_desk_scale():
    # b=5, m=4, groups of about 20 edges
    G = random_graph(5, 80, 6)
    sizes = []
    for seed in range(5):
        res = claim_matching(G, 4, seed=seed)
        assert all(len(A) <= 4 for A in res.per_colour)
        sizes.append(len(res.edges))
    assert min(sizes) >= 0.85 * 4 * 5


def test_prune_full_and_one_bad():
    G = [[(0, 1), (2, 3)], [(4, 5), (6, 7)], [(8, 9), (10, 11)]]
    rep = prune_deficits([M for M in G], G, 2, Fraction(1, 2))
    assert rep.total == 0 and rep.survivors == [0, 1, 2]
    rep = prune_deficits([[], G[1], G[2]], G, 2, 1)
    assert rep.bad == [0]
    assert rep.survivors == [1, 2]
    assert rep.bound_holds


def test_prune_flat_edges_and_cap():
    G = [[(0, 1), (2, 3)], [(4, 5), (6, 7)]]
    rep = prune_deficits([(0, 1), (4, 5), (6, 7)], G, 2, Fraction(1, 10))
    assert rep.per_colour == [1, 0]
    assert rep.total == 1
    with pytest.raises(InvariantViolation):
        prune_deficits([(0, 1), (2, 3)], G, 1, Fraction(1, 10))


def test_prune_bound_recomputed():
    G = random_graph(8, 30, 9)
    res = claim_matching(G, 5, seed=1)
    for delta in (Fraction(1, 10), Fraction(1, 2), Fraction(1)):
        rep = prune_deficits(res.per_colour, G, 5, delta)
        counts = [len(A) for A in res.per_colour]
        total = sum(5 - c for c in counts)
        assert rep.total == total == 5 * 8 - len(res.edges)
        # each bad colour has deficit > m*delta/(1+delta)
        bad = [c for c in counts if c * (1 + delta) < 5]
        assert len(rep.bad) == len(bad)
        assert len(bad) <= total * (1 + delta) / (delta * 5)


@settings(max_examples=30, deadline=None)
@given(b=st.integers(1, 6), size=st.integers(2, 20), m=st.integers(1, 6), seed=st.integers(0, 10**6))
def test_claim_invariants(b, size, m, seed):
    b = min(b, 2 * size - 1)
    G = random_graph(b, size, seed)
    m = min(m, size)
    H = build_aux_hypergraph(G, m, seed)
    assert H.is_linear()
    res = claim_matching(G, m, seed)
    assert is_hypergraph_matching(res.nibble.triples)
    assert is_maximal(res.hypergraph, res.nibble.triples)
    covered = set()
    for A in res.per_colour:
        assert len(A) <= m
        for u, v in A:
            assert u not in covered and v not in covered
            covered.update((u, v))
    rep = prune_deficits(res.per_colour, G, m, Fraction(1, 3))
    assert sum(rep.per_colour) == rep.total == m * b - len(res.edges)
    assert all(d >= 0 for d in rep.per_colour)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 10**6))
def test_nibble_on_random_triples(n, seed):
    rng = random.Random(seed)
    H = [tuple(rng.sample(range(3 * n), 3)) for _ in range(2 * n)]
    res = nibble_matching(H, seed)
    assert is_hypergraph_matching(res.triples)
    assert is_maximal(H, res.triples)
