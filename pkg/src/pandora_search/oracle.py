"""Exact benchmark values on tiny instances: optimal NA, SPA, PA and FA costs.

Scenarios with zero probability are dropped before the searches. Costs
are compared exactly as stored, so two scenarios are indistinguishable
after a probe only when the probed costs are bit-identical.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BudgetError
from .model.constraints import FeasibilityConstraint, SelectOne, check_satisfiable
from .model.instance import SearchInstance
from .model.strategy import StopState, StoppingRule


@dataclass(frozen=True)
class OracleBudget:
    max_boxes_na: int = 20
    max_boxes_spa: int = 8
    max_boxes_pa: int = 6
    max_boxes_fa: int = 5
    max_scenarios_fa: int = 8


DEFAULT_BUDGET = OracleBudget()


def _prepare(instance, constraint, cap, what):
    constraint = constraint or SelectOne()
    constraint.validate(instance.n)
    if instance.n > cap:
        raise BudgetError(f"{what} oracle is capped at {cap} boxes, instance has {instance.n}")
    check_satisfiable(instance, constraint)
    return constraint


def _all_masks(n: int) -> np.ndarray:
    codes = np.arange(1 << n)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def _mask_table(instance: SearchInstance, constraint: FeasibilityConstraint, masks: np.ndarray) -> np.ndarray:
    """``f[mask, s]`` = probing time of ``mask`` plus its best feasible cost in ``s``."""
    time = masks @ instance.probe_times.astype(float)
    out = np.empty((masks.shape[0], instance.m))
    for s in range(instance.m):
        out[:, s] = time + constraint.best_cost_masks(masks, instance.costs[:, s])
    return out


def _weighted(table: np.ndarray, probs: np.ndarray) -> np.ndarray:
    keep = probs > 0
    return table[..., keep] @ probs[keep]


def opt_na(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
           budget: OracleBudget = DEFAULT_BUDGET) -> tuple[float, tuple[int, ...]]:
    """Best fixed probe set, by exhaustive scan over nonempty subsets."""
    constraint = _prepare(instance, constraint, budget.max_boxes_na, "NA")
    n = instance.n
    best, best_code = math.inf, 1
    chunk = 1 << 14
    codes = np.arange(1, 1 << n)
    for lo in range(0, codes.size, chunk):
        part = codes[lo:lo + chunk]
        masks = ((part[:, None] >> np.arange(n)) & 1).astype(bool)
        vals = _weighted(_mask_table(instance, constraint, masks), instance.probs)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best, best_code = float(vals[j]), int(part[j])
    return best, tuple(i for i in range(n) if best_code >> i & 1)


def _prefix_codes(perms: np.ndarray) -> np.ndarray:
    bits = np.left_shift(1, perms)
    return np.cumsum(bits, axis=1)


def opt_spa(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
            budget: OracleBudget = DEFAULT_BUDGET) -> tuple[float, tuple[int, ...]]:
    """Best order when the stopping time may depend on the scenario."""
    constraint = _prepare(instance, constraint, budget.max_boxes_spa, "SPA")
    n = instance.n
    table = _mask_table(instance, constraint, _all_masks(n))
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    keep = instance.probs > 0
    per = table[_prefix_codes(perms)][:, :, keep].min(axis=1)
    vals = per @ instance.probs[keep]
    j = int(np.argmin(vals))
    return float(vals[j]), tuple(int(i) for i in perms[j])


def _groups(scenarios: tuple[int, ...], column: np.ndarray):
    """Split scenarios by their exact cost in ``column`` (stable)."""
    out: dict[float, list[int]] = {}
    for s in scenarios:
        out.setdefault(float(column[s]), []).append(s)
    return [(v, tuple(g)) for v, g in out.items()]


@dataclass
class PAPolicy:
    """An order and a stopping table keyed by the observed cost prefix."""

    order: tuple[int, ...]
    stop: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "order": list(self.order),
            "stop": TableStop(self.stop).params()["stop"],
        }


class _TableState(StopState):
    def __init__(self, stop):
        self.stop = stop
        self.seen: list[float] = []

    def after_probe(self, box, cost, step, next_time):
        self.seen.append(float(cost))
        return next_time is None or self.stop.get(tuple(self.seen), True)


class TableStop(StoppingRule):
    """Stop according to a table over observed cost prefixes (unknown prefixes stop)."""

    kind = "table"
    scenario_aware = False

    def __init__(self, stop: dict):
        self.stop = dict(stop)

    def start(self, instance, constraint, rng, scenario=None):
        return _TableState(self.stop)

    def params(self):
        rows = sorted(self.stop.items(), key=lambda kv: (len(kv[0]), kv[0]))
        return {"stop": [[[_num(v) for v in k], bool(v)] for k, v in rows]}


def _num(v: float):
    return "inf" if math.isinf(v) else v


def _pa_order_value(instance, constraint, order, probs, scen):
    """Backward induction for one order; returns (value, stop table)."""
    n = len(order)
    costs = instance.costs
    ptimes = np.cumsum(instance.probe_times[list(order)])
    table: dict = {}

    def value(t, group, observed):
        # ``t`` boxes probed; ``group`` scenarios agree on the observed costs
        w = float(sum(probs[s] for s in group))
        s0 = group[0]
        cost = constraint.best_cost(costs[:, s0], order[:t])
        stop = w * (ptimes[t - 1] + cost) if math.isfinite(cost) else math.inf
        if t == n:
            table[observed] = True
            return stop
        cont = 0.0
        for v, g in _groups(group, costs[order[t]]):
            cont += value(t + 1, g, observed + (v,))
            if cont >= stop:
                break
        table[observed] = stop <= cont
        return min(stop, cont)

    total = 0.0
    for v, g in _groups(scen, costs[order[0]]):
        total += value(1, g, (v,))
    return total, table


def opt_pa(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
           budget: OracleBudget = DEFAULT_BUDGET) -> tuple[float, PAPolicy]:
    """Best fixed order with a stopping rule that reads the observed costs."""
    constraint = _prepare(instance, constraint, budget.max_boxes_pa, "PA")
    probs = instance.probs
    scen = tuple(int(s) for s in np.flatnonzero(probs > 0))
    best, policy = math.inf, None
    for order in itertools.permutations(range(instance.n)):
        val, table = _pa_order_value(instance, constraint, order, probs, scen)
        if val < best - 1e-12 or policy is None:
            best, policy = val, PAPolicy(tuple(order), table)
    return float(best), policy


def opt_fa(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
           budget: OracleBudget = DEFAULT_BUDGET) -> float:
    """Best fully adaptive strategy: the next box may depend on everything seen."""
    constraint = _prepare(instance, constraint, budget.max_boxes_fa, "FA")
    probs = instance.probs
    scen = tuple(int(s) for s in np.flatnonzero(probs > 0))
    if len(scen) > budget.max_scenarios_fa:
        raise BudgetError(f"FA oracle is capped at {budget.max_scenarios_fa} scenarios, instance has {len(scen)}")
    n = instance.n
    costs = instance.costs
    p = instance.probe_times.astype(float)

    @lru_cache(maxsize=None)
    def value(probed: int, group: tuple[int, ...]) -> float:
        w = float(sum(probs[s] for s in group))
        inside = [i for i in range(n) if probed >> i & 1]
        cost = constraint.best_cost(costs[:, group[0]], inside) if inside else math.inf
        best = w * cost if math.isfinite(cost) else math.inf
        for i in range(n):
            if probed >> i & 1:
                continue
            cont = w * p[i]
            for _, g in _groups(group, costs[i]):
                if cont >= best:
                    break
                cont += value(probed | 1 << i, g)
            best = min(best, cont)
        return best

    return float(value(0, scen))


def oracle_chain(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
                 budget: OracleBudget = DEFAULT_BUDGET) -> dict:
    """All four benchmark values that fit the budget."""
    out = {}
    for name, fn in (("opt_na", opt_na), ("opt_spa", opt_spa), ("opt_pa", opt_pa), ("opt_fa", opt_fa)):
        try:
            res = fn(instance, constraint, budget)
        except BudgetError:
            continue
        out[name] = res[0] if isinstance(res, tuple) else res
    return out
