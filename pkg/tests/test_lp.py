import itertools
import math

import numpy as np
import pytest

from pandora_search.errors import InfeasibleInstanceError, ValidationError
from pandora_search.lp import (
    GE,
    LpProblem,
    build_lp_kcover,
    build_lp_na,
    build_lp_spa,
    build_lp_spa_general,
    kcover_violation,
    minimize_rank_gap,
    separation_kcover,
    separation_matroid,
    solve_dense,
    solve_lp_kcover,
    solve_lp_matroid,
    solve_lp_mssc,
    solve_lp_na,
    solve_lp_spa,
    solve_raw,
    solve_spa_relaxation,
)
from pandora_search.model import (
    GraphicMatroid,
    MatroidBasis,
    PartitionMatroid,
    SearchInstance,
    SelectK,
    UniformMatroid,
)
from pandora_search.oracle import opt_na, opt_spa
from pandora_search.harness.generators import partition_matroid_lb

INF = math.inf

# 0/inf instance whose scenario-aware relaxation is strictly fractional
GAP = [[INF, 0, INF, 0], [0, INF, INF, 0], [INF, INF, 0, INF], [0, 0, INF, INF]]


def check_solution(sol, tol=1e-7):
    assert sol.problem.max_violation(sol.values) <= tol
    assert sol.values.min() >= -tol and sol.values.max() <= 1 + tol
    assert sol.decomposition_gap() <= tol
    assert sol.counting_gap() <= tol


def random_instance(rng, n, m, inf_rate=0.0, times=None):
    c = np.round(rng.uniform(0, 10, (n, m)), 2)
    drop = rng.random((n, m)) < inf_rate
    drop[rng.integers(n, size=m), np.arange(m)] = False
    c[drop] = INF
    return SearchInstance(c, rng.dirichlet(np.ones(m)), times)


def test_trivial_lp():
    lp = LpProblem()
    j = lp.add_var("x", 1.0)
    lp.add_row([j], [1.0], GE, 0.3)
    for backend in ("highs", "simplex"):
        res = solve_raw(lp, backend)
        assert res.values[0] == pytest.approx(0.3)
        assert res.objective == pytest.approx(0.3)
    with pytest.raises(ValueError):
        solve_raw(lp, "nope")


def test_dense_simplex_small():
    # min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6
    x, obj, _ = solve_dense(np.array([-1.0, -1.0]), np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([4.0, 6.0]))
    assert obj == pytest.approx(-2.8)
    assert x[:2] == pytest.approx([1.6, 1.2])


@pytest.mark.parametrize("backend", ["highs", "simplex"])
def test_two_box_example(instance_a, backend):
    na = solve_lp_na(instance_a, backend)
    assert na.objective == pytest.approx(2.0)
    assert na.x == pytest.approx([1.0, 1.0])
    spa = solve_lp_spa(instance_a, backend)
    assert spa.objective == pytest.approx(1.5)
    for sol in (na, spa):
        check_solution(sol)


def test_na_examples(instance_a):
    assert solve_lp_na(SearchInstance([[7.0]])).objective == pytest.approx(8.0)
    slow = instance_a.with_probe_times([3, 3])
    assert solve_lp_na(slow).objective == pytest.approx(6.0)
    # the unit-time builder agrees with the general one
    assert build_lp_na(instance_a).keys == solve_lp_na(instance_a).problem.keys


def test_spa_examples():
    assert solve_lp_spa(SearchInstance(np.zeros((3, 4)))).objective == pytest.approx(1.0)
    gap = SearchInstance(GAP)
    lp = solve_lp_spa(gap).objective
    assert lp == pytest.approx(1.625)
    assert lp < opt_spa(gap)[0] - 1e-6


def test_infeasible_scenario_is_rejected():
    with pytest.raises(InfeasibleInstanceError):
        solve_lp_na(SearchInstance([[INF, 1.0]]))
    with pytest.raises(InfeasibleInstanceError):
        solve_lp_kcover(SearchInstance([[1.0], [INF]]), 2)


def test_backends_agree(rng):
    for _ in range(4):
        inst = random_instance(rng, 3, 3, inf_rate=0.3)
        for solve in (solve_lp_na, solve_lp_spa):
            assert solve(inst, "highs").objective == pytest.approx(solve(inst, "simplex").objective, abs=1e-6)
        full = inst.with_costs(np.nan_to_num(inst.costs, posinf=50))
        assert solve_lp_kcover(full, 2, "simplex").objective == \
            pytest.approx(solve_lp_kcover(full, 2).objective, abs=1e-6)


def test_general_builder_with_unit_times_is_identical(rng):
    inst = random_instance(rng, 3, 2, inf_rate=0.3)
    a, b = build_lp_spa(inst), build_lp_spa_general(inst)
    assert a.keys == b.keys
    assert np.array_equal(a.objective, b.objective)
    assert a.num_rows == b.num_rows


def test_mssc_examples():
    same = SearchInstance(np.zeros((3, 2)))
    assert solve_lp_mssc(same, [[0, 1, 2], [0, 1, 2]]).objective == pytest.approx(1.0)
    # scenarios A, B, C covered by boxes {0,1}, {1,2}, {2}
    covers = [[0, 1], [1, 2], [2]]
    inst = SearchInstance(np.zeros((3, 3)))
    assert solve_lp_mssc(inst, covers).objective <= 4 / 3 + 1e-9
    n = 4
    single = SearchInstance(np.zeros((n, n)))
    assert solve_lp_mssc(single, [[i] for i in range(n)]).objective == pytest.approx((n + 1) / 2)
    with pytest.raises(ValidationError):
        solve_lp_mssc(inst, [[0], [], [2]])


def test_kcover_with_k1_matches_spa(instance_a):
    assert solve_lp_kcover(instance_a, 1).objective == pytest.approx(1.5)
    assert solve_lp_spa(instance_a).objective == pytest.approx(1.5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_kcover_with_all_boxes(n):
    inst = SearchInstance(np.zeros((n, 2)))
    sol = solve_lp_kcover(inst, n)
    # the fractional schedule covers t/n of the demand after t steps
    assert sol.objective == pytest.approx((n + 1) / 2)
    assert sol.objective <= opt_spa(inst, SelectK(n))[0] + 1e-6
    assert opt_spa(inst, SelectK(n))[0] == pytest.approx(n)


def test_kcover_violation_direct():
    # A = {} with y = 1 demands total prefix mass k
    viol, A = kcover_violation(np.array([0.5, 0.5, 0.5]), 1.0, 2)
    assert viol == pytest.approx(0.5) and A == ()
    # a box whose mass exceeds y is better left out of the sum
    viol, A = kcover_violation(np.array([0.9, 0.1, 0.1]), 0.5, 2)
    assert viol == pytest.approx(0.3) and A == (0,)
    viol, _ = kcover_violation(np.array([1.0, 1.0, 0.0]), 1.0, 2)
    assert viol <= 0


def test_kcover_exhaustive_separation(rng):
    inst = random_instance(rng, 4, 3)
    k = 2
    sol = solve_lp_kcover(inst, k)
    check_solution(sol)
    Z = sol.cumulative_z()
    for s in range(inst.m):
        assert np.all(np.diff(sol.y[s]) >= -1e-7)
        for t in range(1, sol.horizon + 1):
            assert separation_kcover(sol, s, t) is None
            for r in range(k):
                for A in itertools.combinations(range(inst.n), r):
                    rest = [i for i in range(inst.n) if i not in A]
                    assert Z[rest, s, t - 1].sum() >= (k - r) * sol.y[s, t - 1] - 1e-6


def test_uniform_matroid_matches_kcover(rng):
    for _ in range(3):
        inst = random_instance(rng, 4, 3)
        for k in (2, 3):
            assert solve_lp_matroid(inst, UniformMatroid(4, k)).objective == \
                pytest.approx(solve_lp_kcover(inst, k).objective, abs=1e-6)


def test_matroid_exhaustive_separation(rng):
    inst = random_instance(rng, 5, 3)
    mat = GraphicMatroid([(0, 1), (1, 2), (0, 2), (2, 3), (3, 0)])
    sol = solve_lp_matroid(inst, mat)
    check_solution(sol)
    r = mat.full_rank
    Z = sol.cumulative_z()
    subsets = [c for q in range(6) for c in itertools.combinations(range(5), q)]
    for s in range(inst.m):
        for A in subsets:
            assert Z[list(A), s, -1].sum() <= mat.rank(A) + 1e-6
        for t in range(1, sol.horizon + 1):
            assert separation_matroid(sol, s, t, mat) is None
            for A in subsets:
                rest = [i for i in range(5) if i not in A]
                assert Z[rest, s, t - 1].sum() >= (r - mat.rank(A)) * sol.y[s, t - 1] - 1e-6


def test_rank_gap_closed_forms_match_brute_force(rng):
    for mat in (UniformMatroid(5, 2), PartitionMatroid([[0, 1], [2, 3, 4]], [1, 2])):
        for _ in range(10):
            w = float(rng.uniform(0, 1))
            v = rng.uniform(0, 1, 5)
            val, A = minimize_rank_gap(mat, w, v)
            brute = min(w * mat.rank(B) - v[list(B)].sum()
                        for q in range(6) for B in itertools.combinations(range(5), q))
            assert val == pytest.approx(brute)
            assert w * mat.rank(A) - v[list(A)].sum() == pytest.approx(val)
    assert minimize_rank_gap(UniformMatroid(3, 1), 5.0, [0.1, 0.1, 0.1])[0] == 0.0


def test_partition_lower_bound_family():
    inst, mat = partition_matroid_lb(k=2, sets=[[0], [1]], universe=2)
    sol = solve_lp_matroid(inst, mat)
    check_solution(sol)
    assert sol.objective <= opt_na(inst, MatroidBasis(mat))[0] + 1e-6


def test_relaxations_are_lower_bounds(rng):
    for trial in range(12):
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        inst = random_instance(rng, n, m, inf_rate=0.25 if trial % 2 else 0.0)
        assert solve_lp_na(inst).objective <= opt_na(inst)[0] + 1e-6
        assert solve_lp_spa(inst).objective <= opt_spa(inst)[0] + 1e-6
        full = inst.with_costs(np.where(np.isinf(inst.costs), 20.0, inst.costs))
        if n >= 2:
            c = SelectK(2)
            assert solve_spa_relaxation(full, c).objective <= opt_spa(full, c)[0] + 1e-6
        if n >= 3:
            c = MatroidBasis(PartitionMatroid([[0], list(range(1, n))], [1, 1]))
            assert solve_spa_relaxation(full, c).objective <= opt_spa(full, c)[0] + 1e-6


def test_general_times_lower_bounds_and_counting(rng):
    for _ in range(6):
        inst = random_instance(rng, 3, 3, inf_rate=0.2, times=rng.permutation([1, 2, 3]))
        na, spa = solve_lp_na(inst), solve_lp_spa(inst)
        assert spa.kind == "lp-spa-general"
        check_solution(spa)
        assert na.objective <= opt_na(inst)[0] + 1e-6
        assert spa.objective <= opt_spa(inst)[0] + 1e-6
        k2 = solve_lp_kcover(inst.with_costs(np.where(np.isinf(inst.costs), 20.0, inst.costs)), 2)
        check_solution(k2)


def test_x_starts_after_probe_completes():
    inst = SearchInstance([[1, 2], [2, 1]], probe_times=[2, 3])
    sol = solve_lp_spa(inst)
    assert sol.horizon == 5
    assert np.all(sol.x[0, :1] == 0) and np.all(sol.x[1, :2] == 0)


def test_lp_dump_is_deterministic(instance_a):
    text = build_lp_kcover(instance_a, 1).to_lp_format()
    assert text == build_lp_kcover(instance_a, 1).to_lp_format()
    assert text.splitlines()[0].startswith("\\ lp-kcover")
    for head in ("Minimize", "Subject To", "Bounds", "End"):
        assert head in text.splitlines()


def test_solution_json(instance_a):
    doc = solve_lp_spa(instance_a).to_json()
    assert doc["kind"] == "lp-spa"
    assert doc["objective"] == pytest.approx(doc["opt_t"] + doc["opt_c"])
