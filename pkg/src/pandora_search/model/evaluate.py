"""Exact expected cost of non-adaptive and scenario-aware strategies."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..errors import ValidationError
from .constraints import FeasibilityConstraint, SelectOne, check_satisfiable
from .instance import SearchInstance


def expectation(instance: SearchInstance, per_scenario: np.ndarray) -> float:
    """Probability-weighted mean that ignores zero-probability scenarios.

    Keeps ``0 * inf`` out of the sum; an infinite value in a positive
    probability scenario makes the result infinite.
    """
    mask = instance.probs > 0
    vals = np.asarray(per_scenario, dtype=float)[mask]
    if np.isinf(vals).any():
        return math.inf
    return float(np.dot(instance.probs[mask], vals))


def evaluate_na(instance: SearchInstance, probe_set: Iterable[int], constraint: FeasibilityConstraint | None = None) -> float:
    """Probe every box of ``probe_set`` and keep the cheapest feasible selection."""
    constraint = constraint or SelectOne()
    probe = sorted(set(int(i) for i in probe_set))
    if not probe:
        raise ValidationError("probe set must be nonempty")
    if probe[0] < 0 or probe[-1] >= instance.n:
        raise ValidationError("probe set mentions a box outside the instance")
    check_satisfiable(instance, constraint)
    time = float(instance.probe_times[probe].sum())
    costs = np.array([constraint.best_cost(instance.costs[:, s], probe) for s in range(instance.m)])
    return expectation(instance, time + costs)


def _check_permutation(order: Sequence[int], n: int) -> list[int]:
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValidationError("order must be a permutation of all boxes")
    return order


def spa_scenario_costs(instance: SearchInstance, order: Sequence[int], constraint: FeasibilityConstraint | None = None):
    """Per-scenario optimal prefix cost and the (1-based) prefix length attaining it.

    Ties pick the shortest prefix. Scenarios with no feasible prefix get
    ``inf`` and stop index ``len(order)``.
    """
    constraint = constraint or SelectOne()
    order = list(order)
    cum = np.cumsum(instance.probe_times[order]).astype(float)
    cost = np.empty(instance.m)
    stop = np.empty(instance.m, dtype=np.int64)
    for s in range(instance.m):
        tot = cum + constraint.prefix_best(order, instance.costs[:, s])
        j = int(np.argmin(tot))
        cost[s] = tot[j]
        stop[s] = j + 1
    return cost, stop


def evaluate_spa(instance: SearchInstance, order: Sequence[int], constraint: FeasibilityConstraint | None = None) -> float:
    """Expected cost of probing in ``order`` and stopping optimally per scenario."""
    order = _check_permutation(order, instance.n)
    cost, _ = spa_scenario_costs(instance, order, constraint)
    return expectation(instance, cost)
