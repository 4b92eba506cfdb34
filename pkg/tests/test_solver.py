import logging

import pytest

from colourmatch.core import DemandSequence, Instance, random_instance, verify_solution
from colourmatch.errors import InvalidInputError
from colourmatch.solver import STRATEGIES, classify_regime, solve

K4_PAIR = Instance(4, [[(0, 1), (2, 3)], [(0, 2), (1, 3)]])


def test_classify_regime():
    n = 10**4
    assert classify_regime(DemandSequence([50, 100], "1/2"), n) == "small"
    assert classify_regime(DemandSequence([200, 3000], "1/2"), n) == "large"
    assert classify_regime(DemandSequence([5, 3000], "1/2"), n) == "mixed"


def test_bad_inputs():
    inst = random_instance(8, 2, 0)
    with pytest.raises(InvalidInputError):
        solve(inst, [1, 1, 1])
    with pytest.raises(InvalidInputError):
        solve(inst, [3, 2])
    with pytest.raises(InvalidInputError):
        solve(inst, [1], strategy="magic")
    with pytest.raises(InvalidInputError):
        solve(inst, [1, 1], chosen=[0, 0])


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_every_strategy_verifies(strategy):
    inst = random_instance(12, 4, 3)
    res = solve(inst, [2, 1, 1], strategy=strategy, seed=1)
    assert res.feasible
    assert verify_solution(inst, [2, 1, 1], res.solution) == []


def test_mixed_regime_warns(caplog):
    inst = random_instance(40, 3, 1)
    with caplog.at_level(logging.WARNING):
        res = solve(inst, DemandSequence([1, 12], "1/2"), seed=0)
    assert "mixed" in caplog.text
    assert res.feasible and res.log[0].startswith("mixed")


def test_chosen_is_respected():
    inst = random_instance(16, 5, 4)
    res = solve(inst, [3, 2], chosen=[4, 1], seed=0)
    assert res.feasible and list(res.solution.chosen) == [4, 1]
    assert verify_solution(inst, [3, 2], res.solution) == []


def test_k4_pair_fixed_order():
    res = solve(K4_PAIR, [2], strategy="exact", chosen=[1])
    assert res.feasible
    assert solve(K4_PAIR, [1, 1], strategy="exact", chosen=[0, 1]).status == "infeasible"


def test_fallback_off_reports_no_solution():
    res = solve(K4_PAIR, [1, 1], fallback=False)
    assert res.status == "no-solution"
