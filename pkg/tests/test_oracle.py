import itertools
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from pandora_search.errors import BudgetError, InfeasibleInstanceError
from pandora_search.model import (
    FixedOrder,
    SearchInstance,
    SelectK,
    SelectOne,
    Strategy,
    evaluate_na,
    evaluate_pa,
    evaluate_spa,
)
from pandora_search.oracle import (
    OracleBudget,
    TableStop,
    opt_fa,
    opt_na,
    opt_pa,
    opt_spa,
    oracle_chain,
)

INF = math.inf

# order-aware stopping beats any online stopping rule here
SPA_GAP = [[4.0, 4.0, 2.0], [5.0, 3.0, 3.0], [4.0, 1.0, 4.0]]

# box 0 reveals which of boxes 1..4 is free
POINTER = [
    [1.0, 2.0, 3.0, 4.0],
    [0, 9, 9, 9],
    [9, 0, 9, 9],
    [9, 9, 0, 9],
    [9, 9, 9, 0],
]


def brute_pa(instance, constraint=None):
    """Best order and stop table by listing every table explicitly."""
    constraint = constraint or SelectOne()
    n, m = instance.n, instance.m
    p = instance.probe_times
    best = INF
    for order in itertools.permutations(range(n)):
        prefixes = sorted({tuple(instance.costs[list(order[:t]), s]) for s in range(m) for t in range(1, n)})
        for choice in itertools.product([True, False], repeat=len(prefixes)):
            stop = dict(zip(prefixes, choice))
            total = 0.0
            for s in range(m):
                for t in range(1, n + 1):
                    key = tuple(instance.costs[list(order[:t]), s])
                    if t == n or stop[key]:
                        c = constraint.best_cost(instance.costs[:, s], order[:t])
                        total += instance.probs[s] * (p[list(order[:t])].sum() + c)
                        break
            best = min(best, total)
    return best


def test_two_box_example(instance_a):
    assert opt_na(instance_a) == (pytest.approx(2.0), (0, 1))
    assert opt_spa(instance_a)[0] == pytest.approx(1.5)
    assert opt_pa(instance_a)[0] == pytest.approx(1.5)
    assert opt_fa(instance_a) == pytest.approx(1.5)


def test_single_scenario():
    inst = SearchInstance([[5.0], [2.0], [7.0]], probe_times=[1, 2, 1])
    want = min(inst.probe_times + inst.costs[:, 0])
    chain = oracle_chain(inst)
    assert all(v == pytest.approx(want) for v in chain.values())


def test_scenario_aware_gap():
    inst = SearchInstance(SPA_GAP)
    assert opt_spa(inst)[0] == pytest.approx(11 / 3)
    assert opt_pa(inst)[0] == pytest.approx(4.0)
    assert opt_pa(inst)[0] == pytest.approx(brute_pa(inst))


def test_pointer_box_helps_only_full_adaptivity():
    inst = SearchInstance(POINTER)
    assert opt_fa(inst) == pytest.approx(2.0)
    assert opt_pa(inst)[0] == pytest.approx(2.5)


def weitzman_cost(values, probs, times):
    """Expected cost of the reservation-value policy on independent boxes."""
    sigma = []
    for v, q, p in zip(values, probs, times):
        f = lambda x: np.dot(q, np.maximum(x - np.asarray(v), 0.0)) - p  # noqa: E731
        sigma.append(brentq(f, min(v) - 1e-9, max(v) + p + 1))
    order = np.argsort(sigma)
    total = 0.0
    for combo in itertools.product(*[range(len(v)) for v in values]):
        w = np.prod([probs[i][j] for i, j in enumerate(combo)])
        best, spent = INF, 0.0
        for i in order:
            if best <= sigma[i]:
                break
            spent += times[i]
            best = min(best, values[i][combo[i]])
        total += w * (spent + best)
    return total


def test_independent_boxes_match_reservation_values():
    values = [[0.0, 6.0], [1.0, 4.0], [2.0, 3.0]]
    probs = [[0.3, 0.7], [0.5, 0.5], [0.6, 0.4]]
    times = [1, 1, 2]
    combos = list(itertools.product(*[range(2)] * 3))
    costs = np.array([[values[i][c[i]] for c in combos] for i in range(3)])
    w = np.array([np.prod([probs[i][c[i]] for i in range(3)]) for c in combos])
    inst = SearchInstance(costs, w, times)
    fa = opt_fa(inst)
    assert fa == pytest.approx(opt_pa(inst)[0])
    assert fa == pytest.approx(weitzman_cost(values, probs, times))


def test_witnesses_reproduce_values(rng):
    for _ in range(6):
        n, m = 4, 4
        c = np.round(rng.uniform(0, 10, (n, m)), 1)
        inst = SearchInstance(c, rng.dirichlet(np.ones(m)), rng.integers(1, 3, n))
        val, S = opt_na(inst)
        assert evaluate_na(inst, S) == pytest.approx(val)
        val, order = opt_spa(inst)
        assert evaluate_spa(inst, order) == pytest.approx(val)
        val, policy = opt_pa(inst)
        strat = Strategy(FixedOrder(policy.order), TableStop(policy.stop))
        assert evaluate_pa(inst, strat, trials=100).mean == pytest.approx(val)


def test_pa_matches_brute_force(rng):
    for _ in range(10):
        n, m = 3, int(rng.integers(2, 4))
        inst = SearchInstance(rng.integers(0, 5, (n, m)).astype(float), rng.dirichlet(np.ones(m)),
                              rng.integers(1, 3, n))
        assert opt_pa(inst)[0] == pytest.approx(brute_pa(inst))
        assert opt_pa(inst, SelectK(2))[0] == pytest.approx(brute_pa(inst, SelectK(2)))


def test_benchmark_chain(rng):
    for trial in range(15):
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 6))
        c = np.round(rng.uniform(0, 10, (n, m)), 1)
        if trial % 3 == 0:
            c[rng.random((n, m)) < 0.3] = INF
            c[rng.integers(n, size=m), np.arange(m)] = 1.0
        inst = SearchInstance(c, rng.dirichlet(np.ones(m)), rng.integers(1, 3, n))
        ch = oracle_chain(inst)
        assert ch["opt_fa"] <= ch["opt_pa"] + 1e-9
        assert ch["opt_spa"] <= ch["opt_pa"] + 1e-9
        assert ch["opt_pa"] <= ch["opt_na"] + 1e-9
        assert ch["opt_spa"] <= ch["opt_na"] + 1e-9


def test_useless_box_changes_nothing(rng):
    c = np.round(rng.uniform(0, 10, (3, 4)), 1)
    inst = SearchInstance(c)
    more = SearchInstance(np.vstack([c, np.full((1, 4), INF)]))
    a, b = oracle_chain(inst), oracle_chain(more)
    for key in a:
        assert b[key] == pytest.approx(a[key])


def test_k_selection():
    inst = SearchInstance([[1, 2], [2, 1], [0, 0]])
    c = SelectK(2)
    # probing boxes 0 and 2 costs 2 + (1 + 2) / 2
    assert opt_na(inst, c) == (pytest.approx(3.5), (0, 2))
    assert opt_fa(inst, c) <= opt_pa(inst, c)[0] + 1e-12


def test_zero_probability_scenarios_are_ignored():
    inst = SearchInstance([[1.0, INF], [3.0, INF]], [1.0, 0.0])
    assert opt_fa(inst) == pytest.approx(2.0)
    assert opt_pa(inst)[0] == pytest.approx(2.0)


def test_budgets():
    big = SearchInstance(np.zeros((9, 2)))
    with pytest.raises(BudgetError):
        opt_pa(big)
    with pytest.raises(BudgetError):
        opt_spa(big)
    assert opt_na(big)[0] == pytest.approx(1.0)
    many = SearchInstance(np.arange(20, dtype=float).reshape(2, 10))
    with pytest.raises(BudgetError):
        opt_fa(many)
    assert opt_fa(many, budget=OracleBudget(max_scenarios_fa=10)) >= 0
    assert set(oracle_chain(big)) == {"opt_na"}
    with pytest.raises(InfeasibleInstanceError):
        opt_na(SearchInstance([[INF, 1.0]]))


def test_policy_json(instance_a):
    _, policy = opt_pa(instance_a)
    doc = policy.to_json()
    assert sorted(doc["order"]) == [0, 1]
    assert all(isinstance(flag, bool) for _, flag in doc["stop"])
