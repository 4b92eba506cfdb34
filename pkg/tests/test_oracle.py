import pytest
from hypothesis import given, settings, strategies as st

from brute import all_matchings, compositions, count_profiles, demands_met
from colourmatch.core import Instance, Solution, random_instance, round_robin_one_factorization, verify_solution
from colourmatch.errors import SizeLimitError
from colourmatch.oracle import (assignments, exact_colourful_matching, exact_search, fallback_solve,
                                greedy_colourful_matching, local_search_improve)

K4_PAIR = Instance(4, [[(0, 1), (2, 3)], [(0, 2), (1, 3)]])


def test_k4_has_ten_matchings():
    # brute force sanity: 1 empty + 6 single edges + 3 perfect
    edges = [e for M in round_robin_one_factorization(4).matchings for e in M]
    assert len(all_matchings(edges)) == 10


def test_exact_k4_single_matching():
    inst = round_robin_one_factorization(4)
    sol = exact_colourful_matching(inst, [2], [0])
    assert set(sol.edges) == set(inst.matchings[0])


def test_exact_k4_pair_absent():
    assert exact_colourful_matching(K4_PAIR, [1, 1], [0, 1]) is None
    assert exact_search(K4_PAIR, [1, 1]) is None
    assert not demands_met(count_profiles(K4_PAIR.matchings), [1, 1])


def test_exact_k6_pair_found():
    inst = round_robin_one_factorization(6)
    sol = exact_colourful_matching(inst, [1, 1], [0, 1])
    assert sol is not None
    assert verify_solution(inst, [1, 1], sol) == []


def test_exact_cap():
    inst = round_robin_one_factorization(18)
    with pytest.raises(SizeLimitError):
        exact_colourful_matching(inst, [1], [0])
    assert exact_colourful_matching(inst, [1], [0], cap=18) is not None


def test_assignments_dedupe_equal_demands():
    # equal demands: only the set of chosen matchings matters
    assert len(list(assignments(4, [1, 1]))) == 6
    assert len(list(assignments(4, [2, 1]))) == 12


@pytest.mark.parametrize("n2", [4, 6, 8, 10])
def test_exact_matches_brute_force(n2):
    inst = round_robin_one_factorization(n2).sub(range(min(4, n2 - 1)))
    prof = count_profiles(inst.matchings)
    for dem in compositions(n2 // 2, inst.ell):
        assert (exact_search(inst, dem) is not None) == demands_met(prof, dem), dem


def test_greedy_k4_pair_does_not_claim():
    assert greedy_colourful_matching(K4_PAIR, [1, 1]) is None


def test_greedy_single_full_matching():
    inst = random_instance(12, 3, 2)
    sol = greedy_colourful_matching(inst, [6])
    assert sol is not None and sol.counts == (6,)


def test_greedy_third_load_five_hundred():
    import random
    rng = random.Random(11)
    for i in range(500):
        n2 = rng.randrange(6, 61, 2)
        n = n2 // 2
        k = rng.randint(1, min(5, n2 - 1))
        ell = rng.randint(k, n2 - 1)
        inst = random_instance(n2, ell, i)
        total = rng.randint(k, max(k, n // 3))
        if total > n // 3:
            continue
        cuts = sorted(rng.sample(range(1, total), k - 1)) if k > 1 else []
        dem = [b - a for a, b in zip([0] + cuts, cuts + [total])]
        sol = greedy_colourful_matching(inst, dem)
        assert sol is not None, (n2, ell, dem)
        assert verify_solution(inst, dem, sol) == []


def test_local_search_trivial_cases():
    inst = round_robin_one_factorization(8)
    full = Solution.from_edges(inst, inst.matchings[0][:2], [0])
    assert local_search_improve(inst, [2], full) is full
    short = Solution.from_edges(inst, [], [0, 1])
    assert local_search_improve(inst, [1, 1], short, budget=0) is short


def test_local_search_does_not_lose_ground():
    inst = random_instance(10, 4, 5)
    dem = [2, 2, 1]
    start = Solution.from_edges(inst, inst.matchings[0][:2], [0, 1, 2])
    before = sum(max(0, a - c) for a, c in zip(dem, start.counts))
    out = local_search_improve(inst, dem, start, budget=500, seed=1)
    after = sum(max(0, a - c) for a, c in zip(dem, out.counts))
    assert after <= before
    assert all(min(c, a) >= min(c0, a) for c, c0, a in zip(out.counts, start.counts, dem))
    assert verify_solution(inst, dem, out) == [] or after > 0


def test_fallback_statuses():
    assert fallback_solve(K4_PAIR, [1, 1]).status == "infeasible"
    assert fallback_solve(K4_PAIR, [1, 1, 1]).tier == "arity"
    assert fallback_solve(round_robin_one_factorization(6), [2, 2]).tier == "counting"
    res = fallback_solve(random_instance(20, 3, 1), [3, 3, 3])
    assert res.feasible
    assert verify_solution(random_instance(20, 3, 1), [3, 3, 3], res.solution) == []


def test_fallback_without_proof_is_no_solution():
    # 4-vertex blocks; each block serves one colour only, so (5,5) needs 10
    # edges with both counts even.  n2=20 is above the exact cap.
    n2 = 20
    M0 = [e for b in range(0, n2, 4) for e in ((b, b + 1), (b + 2, b + 3))]
    M1 = [e for b in range(0, n2, 4) for e in ((b, b + 2), (b + 1, b + 3))]
    inst = Instance(n2, [M0, M1])
    res = fallback_solve(inst, [3, 3], restarts=2, budget=200)
    assert res.feasible
    res = fallback_solve(inst, [5, 5], restarts=2, budget=300)
    assert res.status == "no-solution"
    assert fallback_solve(inst, [5, 5], cap=20).status == "infeasible"


@settings(max_examples=40, deadline=None)
@given(n2=st.sampled_from([4, 6, 8, 10]), seed=st.integers(0, 10**6), data=st.data())
def test_oracle_soundness_and_completeness(n2, seed, data):
    ell = data.draw(st.integers(1, min(5, n2 - 1)))
    inst = random_instance(n2, ell, seed)
    k = data.draw(st.integers(1, ell))
    dem = data.draw(st.lists(st.integers(1, n2 // 2), min_size=k, max_size=k))
    sol = exact_search(inst, dem)
    assert (sol is not None) == demands_met(count_profiles(inst.matchings), dem)
    if sol is not None:
        assert verify_solution(inst, dem, sol) == []
