"""Strategies as (probing order, stopping rule) pairs, and their simulation.

An order source produces a stream of *steps*; each step is a tuple of boxes
probed one after another (plain orders use one box per step, the phased
roundings open several). A stopping rule is started once per run and is
asked after every single probe whether to stop. Rules that are allowed to
see the realised scenario declare ``scenario_aware = True``; all others are
only ever shown the costs of boxes they have probed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ..errors import ValidationError
from .constraints import FeasibilityConstraint, SelectOne
from .evaluate import spa_scenario_costs
from .instance import SearchInstance

DEFAULT_MAX_STEPS = 1 << 16


class OrderSource:
    randomized = False

    def steps(self, rng: np.random.Generator) -> Iterator[tuple[int, ...]]:
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


class FixedOrder(OrderSource):
    """A deterministic sequence of distinct boxes."""

    def __init__(self, boxes: Sequence[int]):
        boxes = tuple(int(b) for b in boxes)
        if len(set(boxes)) != len(boxes):
            raise ValidationError("a fixed probing order may not repeat boxes")
        if any(b < 0 for b in boxes):
            raise ValidationError("box indices must be nonnegative")
        self.boxes = boxes

    def steps(self, rng=None):
        for b in self.boxes:
            yield (b,)

    def to_json(self):
        return list(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def __repr__(self):
        return f"FixedOrder({list(self.boxes)})"


class StopState:
    def after_probe(self, box: int, cost: float, step: int, next_time: int | None) -> bool:
        """Return True to stop right after this probe.

        ``next_time`` is the probing time of the box the order would probe
        next (None when the order is exhausted); it depends on the order
        only, never on costs.
        """
        raise NotImplementedError


class StoppingRule:
    kind = "abstract"
    scenario_aware = True

    def start(self, instance: SearchInstance, constraint: FeasibilityConstraint, rng: np.random.Generator,
              scenario: int | None = None) -> StopState:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_json(self):
        return {"kind": self.kind, **self.params()}


class _FixedSetState(StopState):
    def __init__(self, remaining):
        self.remaining = set(remaining)

    def after_probe(self, box, cost, step, next_time):
        self.remaining.discard(box)
        return not self.remaining


class FixedSet(StoppingRule):
    """Non-adaptive: stop once every box of ``probe_set`` has been probed."""

    kind = "fixed-set"
    scenario_aware = False

    def __init__(self, probe_set):
        self.probe_set = frozenset(int(i) for i in probe_set)
        if not self.probe_set:
            raise ValidationError("probe set must be nonempty")

    def start(self, instance, constraint, rng, scenario=None):
        return _FixedSetState(self.probe_set)

    def params(self):
        return {"probe_set": sorted(self.probe_set)}


class _CountdownState(StopState):
    def __init__(self, probes_left):
        self.left = probes_left

    def after_probe(self, box, cost, step, next_time):
        self.left -= 1
        return self.left <= 0


class ScenarioAware(StoppingRule):
    """Knows the scenario and stops at the optimal prefix of a fixed order."""

    kind = "scenario-aware"

    def __init__(self, order: Sequence[int]):
        self.order = tuple(int(i) for i in order)
        self._cache: dict = {}

    def start(self, instance, constraint, rng, scenario=None):
        if scenario is None:
            raise ValidationError("scenario-aware rule needs the scenario")
        key = (id(instance), id(constraint))
        if key not in self._cache:
            self._cache = {key: spa_scenario_costs(instance, self.order, constraint)[1]}
        return _CountdownState(int(self._cache[key][scenario]))

    def params(self):
        return {"order": list(self.order)}


class _LowSetState(StopState):
    def __init__(self, low):
        self.low = low

    def after_probe(self, box, cost, step, next_time):
        return box in self.low


class LowSetHit(StoppingRule):
    """Stop at the first probed box of the scenario's low set."""

    kind = "low-set-hit"

    def __init__(self, low_sets: Sequence[Sequence[int]]):
        self.low_sets = [frozenset(int(i) for i in ls) for ls in low_sets]

    def start(self, instance, constraint, rng, scenario=None):
        if scenario is None:
            raise ValidationError("low-set rule needs the scenario")
        return _LowSetState(self.low_sets[scenario])

    def params(self):
        return {"low_sets": [sorted(ls) for ls in self.low_sets]}


@dataclass
class Strategy:
    order: OrderSource
    stopping: StoppingRule
    seed: int | None = None

    def __post_init__(self):
        if isinstance(self.order, (list, tuple)):
            self.order = FixedOrder(self.order)

    @classmethod
    def non_adaptive(cls, probe_set) -> "Strategy":
        s = sorted(set(int(i) for i in probe_set))
        return cls(FixedOrder(s), FixedSet(s))

    @classmethod
    def scenario_aware(cls, order) -> "Strategy":
        return cls(FixedOrder(order), ScenarioAware(order))

    def to_json(self) -> dict:
        return {"order": self.order.to_json(), "stopping": self.stopping.to_json(), "seed": self.seed}


@dataclass
class Run:
    time: float
    cost: float
    probes: int
    steps: int
    forced: bool
    probed: frozenset = field(default_factory=frozenset)
    selected_cost: float | None = None

    @property
    def total(self) -> float:
        return self.time + self.cost


def _probe_stream(order: OrderSource, rng, max_steps):
    for step, group in enumerate(order.steps(rng), start=1):
        if step > max_steps:
            return
        for b in group:
            yield step, b


def simulate(instance: SearchInstance, constraint: FeasibilityConstraint, strategy: Strategy, scenario: int,
             order_rng: np.random.Generator, stop_rng: np.random.Generator, *,
             max_steps: int = DEFAULT_MAX_STEPS, repay_duplicates: bool = True) -> Run:
    """Run one strategy in one scenario.

    The returned cost is the cheapest feasible selection among all probed
    boxes (a box must be probed to be chosen). If the rule never stops the
    run halts after the order is exhausted, or after ``max_steps`` steps,
    and is flagged ``forced``.
    """
    rule = strategy.stopping
    state = rule.start(instance, constraint, stop_rng, scenario if rule.scenario_aware else None)
    c = instance.costs[:, scenario]
    p = instance.probe_times
    time = 0
    probed: set[int] = set()
    probes = 0
    step = 0
    forced = True
    stream = _probe_stream(strategy.order, order_rng, max_steps)
    nxt = next(stream, None)
    while nxt is not None:
        step, box = nxt
        if not 0 <= box < instance.n:
            raise ValidationError(f"order probes unknown box {box}")
        if repay_duplicates or box not in probed:
            time += int(p[box])
        probed.add(box)
        probes += 1
        nxt = next(stream, None)
        if state.after_probe(box, float(c[box]), step, None if nxt is None else int(p[nxt[1]])):
            forced = False
            break
    cost = constraint.best_cost(c, probed) if probed else math.inf
    selected = getattr(state, "selected_cost", None)
    if forced and selected is not None and not math.isfinite(selected):
        selected = cost
    return Run(float(time), cost, probes, step, forced, frozenset(probed), selected)


def stratified_counts(probs: np.ndarray, trials: int) -> np.ndarray:
    """Trials per scenario: proportional allocation, at least 2 where probability > 0."""
    counts = np.where(probs > 0, np.maximum(2, np.ceil(trials * probs)), 0)
    return counts.astype(np.int64)


def stratified_estimate(values: np.ndarray, scenarios: np.ndarray, probs: np.ndarray) -> tuple[float, float]:
    """Mean and standard error of a probability-stratified sample."""
    mean = 0.0
    var = 0.0
    for s in np.flatnonzero(probs > 0):
        v = values[scenarios == s]
        if np.isinf(v).any():
            return math.inf, math.inf
        mean += probs[s] * v.mean()
        var += probs[s] ** 2 * v.var(ddof=1) / v.size
    return float(mean), float(math.sqrt(var))


@dataclass
class PAEstimate:
    mean: float
    stderr: float
    trials: int
    forced: int
    mean_time: float
    mean_cost: float
    selected_mean: float | None = None
    selected_stderr: float | None = None

    def upper(self, sigmas: float = 3.0) -> float:
        return self.mean + sigmas * self.stderr

    def to_json(self) -> dict:
        return {
            "mean": self.mean, "stderr": self.stderr, "trials": self.trials, "forced": self.forced,
            "mean_time": self.mean_time, "mean_cost": self.mean_cost,
            "selected_mean": self.selected_mean, "selected_stderr": self.selected_stderr,
        }


def rng_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent order and stopping streams derived from one seed."""
    order_seq, stop_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(order_seq), np.random.default_rng(stop_seq)


def evaluate_pa(instance: SearchInstance, strategy: Strategy, constraint: FeasibilityConstraint | None = None,
                trials: int = 1000, seed: int | None = 0, *, max_steps: int = DEFAULT_MAX_STEPS,
                repay_duplicates: bool = True) -> PAEstimate:
    """Monte-Carlo expected total cost, stratified over scenarios.

    Deterministic given ``seed``. Deterministic strategies give zero
    variance and reproduce the exact evaluators.
    """
    constraint = constraint or SelectOne()
    constraint.validate(instance.n)
    order_rng, stop_rng = rng_streams(seed)
    counts = stratified_counts(instance.probs, trials)
    scen = np.repeat(np.arange(instance.m), counts)
    totals = np.empty(scen.size)
    times = np.empty(scen.size)
    costs = np.empty(scen.size)
    selected = np.full(scen.size, np.nan)
    forced = 0
    for j, s in enumerate(scen):
        run = simulate(instance, constraint, strategy, int(s), order_rng, stop_rng,
                       max_steps=max_steps, repay_duplicates=repay_duplicates)
        totals[j], times[j], costs[j] = run.total, run.time, run.cost
        if run.selected_cost is not None:
            selected[j] = run.time + run.selected_cost
        forced += run.forced
    return summarize(instance, scen, totals, times, costs, selected, forced)


def summarize(instance, scen, totals, times, costs, selected=None, forced=0) -> PAEstimate:
    """Stratified estimate from per-trial totals (``selected`` may be all NaN)."""
    mean, se = stratified_estimate(totals, scen, instance.probs)
    mt, _ = stratified_estimate(times, scen, instance.probs)
    mc, _ = stratified_estimate(costs, scen, instance.probs)
    sm = sse = None
    if selected is not None and not np.isnan(selected).any():
        sm, sse = stratified_estimate(selected, scen, instance.probs)
    return PAEstimate(mean, se, int(scen.size), int(forced), mt, mc, sm, sse)
