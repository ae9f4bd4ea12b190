import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pandora_search.errors import InfeasibleInstanceError, ValidationError
from pandora_search.model import (
    ExplicitMatroid,
    FixedOrder,
    FixedSet,
    GraphicMatroid,
    MatroidBasis,
    PartitionMatroid,
    ScenarioAware,
    SearchInstance,
    SelectK,
    SelectOne,
    Strategy,
    UniformMatroid,
    evaluate_na,
    evaluate_pa,
    evaluate_spa,
    parse_constraint,
    simulate,
)
from pandora_search.model.strategy import rng_streams


def test_instance_validation():
    with pytest.raises(ValidationError):
        SearchInstance([1, 2])
    with pytest.raises(ValidationError):
        SearchInstance([[-1.0]])
    with pytest.raises(ValidationError):
        SearchInstance([[1.0, 2.0]], probs=[0.5, 0.6])
    with pytest.raises(ValidationError):
        SearchInstance([[1.0]], probe_times=[0])
    with pytest.raises(ValidationError):
        SearchInstance([[1.0]], probe_times=[1.5])
    with pytest.raises(ValidationError):
        SearchInstance([[1.0]], probe_times=[4], max_probe_time=3)
    inst = SearchInstance([[1.0, math.inf]], probs=[1.0, 0.0])
    with pytest.raises(AttributeError):
        inst.max_probe_time = 2
    with pytest.raises(ValueError):
        inst.costs[0, 0] = 5


def test_instance_json_round_trip(tmp_path):
    inst = SearchInstance([[0, math.inf, 2.5], [3, 1, 0]], [0.2, 0.3, 0.5], [2, 1])
    again = SearchInstance.from_json(inst.to_json())
    assert again == inst
    assert '"inf"' in inst.to_json()
    path = tmp_path / "i.json"
    inst.save(path)
    assert SearchInstance.load(path) == inst
    with pytest.raises(ValidationError):
        SearchInstance.from_json("{not json")
    with pytest.raises(ValidationError):
        SearchInstance.from_dict({"boxes": [{}], "scenarios": [{"prob": 1, "costs": [1, 2]}]})


def test_evaluators_on_two_box_example(instance_a):
    assert evaluate_na(instance_a, [0, 1]) == pytest.approx(2.0)
    assert evaluate_na(instance_a, [0]) == pytest.approx(6.0)
    assert evaluate_spa(instance_a, [0, 1]) == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        evaluate_spa(instance_a, [0, 0])
    with pytest.raises(ValidationError):
        evaluate_na(instance_a, [])


def test_unsatisfiable_instance():
    inst = SearchInstance([[math.inf, 1.0]])
    with pytest.raises(InfeasibleInstanceError):
        evaluate_na(inst, [0])
    # zero-probability scenarios do not count
    inst = SearchInstance([[math.inf, 1.0]], [0.0, 1.0])
    assert evaluate_na(inst, [0]) == pytest.approx(2.0)


def test_select_k_costs():
    c = SelectK(2)
    assert c.best_cost([5, 1, 3], [0, 1, 2]) == 4
    assert c.best_cost([5, 1, 3], [1]) == math.inf
    assert c.best_cost([math.inf, 1, 3], [0, 1]) == math.inf
    inst = SearchInstance([[1, 2], [2, 1], [0, 0]])
    assert evaluate_na(inst, [0, 1, 2], c) == pytest.approx(3 + 1)
    with pytest.raises(ValidationError):
        c.validate(1)


def test_parse_constraint(tmp_path):
    assert isinstance(parse_constraint("one"), SelectOne)
    assert isinstance(parse_constraint("k:1"), SelectOne)
    assert parse_constraint("k:3").k == 3
    with pytest.raises(ValidationError):
        parse_constraint("k:x")
    with pytest.raises(ValidationError):
        parse_constraint("k:5", n=3)
    with pytest.raises(ValidationError):
        parse_constraint("bogus")
    path = tmp_path / "m.json"
    UniformMatroid(4, 2).save(path)
    c = parse_constraint(f"matroid:{path}", n=4)
    assert isinstance(c, MatroidBasis) and c.target_rank == 2


def test_matroid_ranks():
    u = UniformMatroid(5, 2)
    assert u.rank([0]) == 1 and u.rank([0, 1, 2]) == 2
    p = PartitionMatroid([[0, 1], [2, 3, 4]], [1, 2])
    assert p.rank([0, 1]) == 1
    assert p.rank([0, 2, 3, 4]) == 3
    assert p.full_rank == 3
    g = GraphicMatroid([(0, 1), (1, 2), (0, 2), (2, 3)])
    assert g.rank([0, 1, 2]) == 2
    assert g.full_rank == 3
    e = ExplicitMatroid(3, [[0, 1], [0, 2], [0], [1], [2]])
    assert e.rank([1, 2]) == 1
    with pytest.raises(ValidationError):
        ExplicitMatroid(3, [[0, 1]])  # not closed under subsets
    with pytest.raises(ValidationError):
        ExplicitMatroid(3, [[0, 1], [0], [1], [2]])  # exchange fails for {0,1} vs {2}
    with pytest.raises(ValidationError):
        u.rank([7])


@pytest.mark.parametrize("matroid", [
    UniformMatroid(5, 3),
    PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1]),
    GraphicMatroid([(0, 1), (1, 2), (0, 2), (2, 3), (3, 0)]),
])
def test_rank_is_submodular_and_monotone(matroid):
    n = matroid.ground_size
    subsets = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(range(n), r)]
    r = {s: matroid.rank(s) for s in subsets}
    for a in subsets:
        assert 0 <= r[a] <= len(a)
        for b in subsets:
            assert r[a | b] + r[a & b] <= r[a] + r[b]
            if a <= b:
                assert r[a] <= r[b]
    masks = np.array([[i in s for i in range(n)] for s in subsets])
    assert list(matroid.rank_many(masks)) == [r[s] for s in subsets]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=5, max_size=5))
def test_min_weight_basis_matches_enumeration(w):
    m = PartitionMatroid([[0, 1, 2], [3, 4]], [2, 1])
    basis = m.min_weight_basis(w)
    assert m.is_independent(basis) and len(basis) == m.full_rank
    best = min(sum(w[i] for i in c) for c in itertools.combinations(range(5), 3) if m.is_independent(c))
    assert sum(w[i] for i in basis) == pytest.approx(best)


def test_matroid_constraint_best_cost():
    c = MatroidBasis(PartitionMatroid([[0, 1], [2, 3]], [1, 1]))
    assert c.best_cost([3, 1, 5, 2], range(4)) == 3
    assert c.best_cost([3, 1, 5, 2], [0, 1]) == math.inf
    assert c.best_cost([3, math.inf, 5, math.inf], [0, 1, 2, 3]) == 8


def test_matroid_json_round_trip():
    from pandora_search.model import matroid_from_dict

    for m in (UniformMatroid(4, 2), PartitionMatroid([[0], [1, 2]], [1, 1]),
              GraphicMatroid([(0, 1), (1, 2)]), ExplicitMatroid(2, [[0], [1]])):
        again = matroid_from_dict(json.loads(json.dumps(m.to_dict())))
        assert again.kind == m.kind
        assert again.full_rank == m.full_rank


def test_scaling_multiplies_costs():
    inst = SearchInstance([[1, 4], [3, 0]], [0.4, 0.6], [1, 2])
    big = inst.scaled(3)
    assert evaluate_spa(big, [1, 0]) == pytest.approx(3 * evaluate_spa(inst, [1, 0]))
    assert evaluate_na(big, [0, 1]) == pytest.approx(3 * evaluate_na(inst, [0, 1]))


def _random_instance(rng, n=4, m=5):
    costs = np.round(rng.uniform(0, 10, (n, m)), 2)
    return SearchInstance(costs, rng.dirichlet(np.ones(m)), rng.integers(1, 3, n))


def test_fixed_set_strategy_reproduces_na(rng):
    inst = _random_instance(rng)
    strat = Strategy.non_adaptive([0, 2])
    est = evaluate_pa(inst, strat, trials=200)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)
    assert est.mean == pytest.approx(evaluate_na(inst, [0, 2]))
    assert est.forced == 0


def test_scenario_aware_strategy_reproduces_spa(rng):
    inst = _random_instance(rng)
    order = [3, 1, 0, 2]
    est = evaluate_pa(inst, Strategy.scenario_aware(order), trials=300)
    assert est.mean == pytest.approx(evaluate_spa(inst, order))


def test_order_exhaustion_is_flagged_forced(instance_a):
    class Never(FixedSet):
        def start(self, instance, constraint, rng, scenario=None):
            state = super().start(instance, constraint, rng, scenario)
            state.after_probe = lambda *a: False
            return state

    strat = Strategy(FixedOrder([0, 1]), Never([0, 1]))
    o, s = rng_streams(0)
    run = simulate(instance_a, SelectOne(), strat, 0, o, s)
    assert run.forced and run.time == 2 and run.cost == 0


def test_strategy_json():
    strat = Strategy(FixedOrder([1, 0]), ScenarioAware([1, 0]), seed=7)
    doc = json.loads(json.dumps(strat.to_json()))
    assert doc["order"] == [1, 0]
    assert doc["stopping"]["kind"] == "scenario-aware"
    assert doc["seed"] == 7


def test_evaluate_pa_is_deterministic(instance_a):
    from pandora_search.ski import spa_to_pa

    strat = Strategy(FixedOrder([0, 1]), spa_to_pa())
    a = evaluate_pa(instance_a, strat, trials=500, seed=3)
    b = evaluate_pa(instance_a, strat, trials=500, seed=3)
    assert a == b
