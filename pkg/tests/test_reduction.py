import dataclasses
import math
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from colourmatch.core import DemandSequence, random_instance, relabel_random, round_robin_one_factorization, \
    verify_solution
from colourmatch.errors import RegimeError
from colourmatch.oracle import exact_search
from colourmatch.reduction import (build_chain, chain_constants, choose_pq, happy_check_chain, next_terms,
                                   solve_large)

BIG = [4_600_000, 50_000, 60_000, 80_000, 100_000]


def codes(report):
    return {v.kind for v in report}


def test_constants_frozen():
    delta, mu, S, lam = chain_constants("1/2", 10**4)
    # independent: S = ceil(2 (1+mu) n^delta ln n)
    S_ref = math.ceil(2 * 1.5 * math.exp(0.05 * math.log(10**4)) * math.log(10**4))
    assert (delta, mu, S) == (Fraction(1, 20), Fraction(1, 2), S_ref) == (Fraction(1, 20), Fraction(1, 2), 44)
    assert lam == pytest.approx(math.log(1.5) / 44)
    assert lam == pytest.approx(0.00922, abs=5e-6)


def test_next_terms_formula():
    assert next_terms([10, 10], 0.1, 0.5) == [22]


def test_single_term_chain():
    ch = build_chain(DemandSequence([4000], "1/2"), 10**4)
    assert ch.s == 0 and ch.chain == [[4000]]
    assert happy_check_chain(ch) == []


def test_choose_pq_examples():
    c = choose_pq(0.3, 10**4, "1/20", q=10)
    assert (c.p, c.q, c.bracket_ok) == (3, 10, True)
    c = choose_pq(0.349, 10**4, "1/20", q=10)
    assert (c.p, c.q) == (3, 10)
    assert c.bracket_ok and 0.349 - 0.3 <= 0.1


def test_choose_pq_interval():
    span = 10 ** (4 * 4 * 0.05)  # n^(4d) with n=10^4, d=1/20
    c = choose_pq(0.4, 10**4, "1/20")
    assert span / 4 <= c.q <= span / 2
    assert c.q == 2 and c.in_regime
    # tiny n: the interval holds no integer >= 2
    c = choose_pq(0.4, 10, "1/20")
    assert c.q == 2 and not c.in_regime


def test_choose_pq_ratio_range():
    with pytest.raises(ValueError):
        choose_pq(1.0, 100, "1/20")


def test_chain_with_lifts_at_ten_million():
    ch = build_chain(DemandSequence(BIG, "1/2"), 10**7)
    assert ch.s >= 1
    assert happy_check_chain(ch) == []
    assert ch.chain[0] == sorted(BIG)
    for j, A in enumerate(ch.chain):
        assert A == sorted(A)
        assert all(x >= y for x, y in zip(A, ch.chain[0]))
        assert len(A) == len(BIG) - j
    for j in range(ch.s):
        s0, s1 = sum(ch.chain[j]), sum(ch.chain[j + 1])
        assert (1 + ch.lam / 2) * s0 <= s1 <= (1 + ch.lam) * s0
    assert ch.s < ch.S
    assert ch.chain[-1][-1] <= 10 ** (7 * 0.95)


def test_chain_regime_errors():
    with pytest.raises(RegimeError) as ex:
        build_chain(DemandSequence([10, 4000], "1/2"), 10**4)
    assert ex.value.check == "large-terms"
    with pytest.raises(RegimeError) as ex:
        build_chain(DemandSequence([3000, 3000], "1/2"), 10**4)
    assert ex.value.check == "sum-budget"
    with pytest.raises(RegimeError) as ex:
        build_chain(DemandSequence([200, 300], "1/2"), 10**4)
    assert ex.value.check == "sum-floor"


def test_nonstrict_chain_records():
    ch = build_chain(DemandSequence([5, 5, 5, 5], "1/2"), 20, strict=False, exhaust=True)
    assert ch.s == 3 and len(ch.chain[-1]) == 1
    assert ch.violations


# -- forged corruptions -------------------------------------------------------------


def good_chain():
    ch = build_chain(DemandSequence(BIG, "1/2"), 10**7)
    assert happy_check_chain(ch) == []
    return ch


def test_forged_sum_growth():
    ch = good_chain()
    forged = dataclasses.replace(ch, chain=[list(A) for A in ch.chain])
    forged.chain[1] = [x * 2 for x in forged.chain[1]]
    assert "sum-growth" in codes(happy_check_chain(forged))


def test_forged_sigma_order():
    ch = good_chain()
    forged = dataclasses.replace(ch, chain=[ch.chain[1], ch.chain[0]] + ch.chain[2:])
    rep = codes(happy_check_chain(forged))
    assert "sum-growth" in rep and "length" in rep


def test_forged_step_bound():
    ch = good_chain()
    forged = dataclasses.replace(ch, S=ch.s)
    assert "step-bound" in codes(happy_check_chain(forged))


def test_forged_others():
    ch = good_chain()
    f = dataclasses.replace(ch, chain=[list(A) for A in ch.chain])
    f.chain[0] = list(reversed(f.chain[0]))
    assert "nondecreasing" in codes(happy_check_chain(f))
    f = dataclasses.replace(ch, ratios=[r * 1.01 for r in ch.ratios])
    assert "recursion" in codes(happy_check_chain(f))
    f = dataclasses.replace(ch, pq=[dataclasses.replace(c, p=c.p + 1) for c in ch.pq])
    assert "pq-bracket" in codes(happy_check_chain(f))
    f = dataclasses.replace(ch, pq=[dataclasses.replace(c, q=1000) for c in ch.pq])
    assert "q-range" in codes(happy_check_chain(f))
    f = dataclasses.replace(ch, n=10**9)
    assert "stop-rule" in codes(happy_check_chain(f)) or "ratio-floor" in codes(happy_check_chain(f))


# -- solver -----------------------------------------------------------------------


def committee(seed):
    return relabel_random(round_robin_one_factorization(60), seed).sub([0, 1, 2])


def test_committee_instance():
    for seed in range(10):
        inst = committee(seed)
        res = solve_large(inst, DemandSequence([9, 9, 9]), seed=seed)
        assert res.feasible
        assert verify_solution(inst, [9, 9, 9], res.solution) == []


def test_single_large_demand():
    inst = random_instance(40, 3, 2)
    a = math.floor((1 - 0.1) * 20)
    res = solve_large(inst, DemandSequence([a]), seed=1)
    assert res.feasible
    (c,) = res.solution.chosen
    assert set(res.solution.edges) <= set(inst.matchings[c])


def test_forced_lift_path_forty():
    for seed in range(5):
        inst = random_instance(40, 4, seed)
        res = solve_large(inst, DemandSequence([4, 4, 4, 4], "1/2"), seed=seed, forced_q=2)
        assert res.feasible, res.log
        assert res.tier in ("reduction", "reduction+local")
        assert any(line.startswith("lift") for line in res.log)
        assert verify_solution(inst, [4, 4, 4, 4], res.solution) == []


def test_forced_lift_shrunk_against_oracle():
    for seed in range(5):
        inst = random_instance(16, 4, seed)
        dem = [2, 2, 2, 2]
        res = solve_large(inst, DemandSequence(dem, "1/2"), seed=seed, forced_q=2)
        assert res.feasible == (exact_search(inst, dem) is not None)
        if res.feasible:
            assert verify_solution(inst, dem, res.solution) == []


def test_four_fives_is_infeasible_on_round_robin():
    # a perfect matching split 5/5/5/5 over the first four rounds does not exist
    inst = round_robin_one_factorization(40).sub(range(4))
    res = solve_large(inst, DemandSequence([5, 5, 5, 5], "1/2"), seed=0, forced_q=2, cap=40)
    assert res.status == "infeasible"


# -- properties -------------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(eps=st.sampled_from(["3/10", "2/5", "1/2"]), logn=st.integers(5, 9), k=st.integers(1, 8),
       load=st.floats(0.34, 0.99), skew=st.booleans(), seed=st.integers(0, 10**6))
def test_built_chains_recheck_clean(eps, logn, k, load, skew, seed):
    n = 10**logn
    e = float(Fraction(eps))
    total = int(n * min(load, (1 - e) * 0.99))
    assume(3 * total >= n)
    rng = random.Random(seed)
    w = [rng.random() + 0.01 for _ in range(k)]
    if skew:
        w[0] *= 5 * k
    ds = [max(1, int(total * x / sum(w))) for x in w]
    try:
        ch = build_chain(DemandSequence(ds, eps), n)
    except RegimeError:
        return
    assert happy_check_chain(ch) == []
    assert ch.s < ch.S
    base = sorted(ds)
    for A in ch.chain:
        assert all(x >= y for x, y in zip(A, base))
