"""Randomized roundings of the LP relaxations into probing strategies.

Every rounding returns a :class:`Strategy` whose order source is independent
of the scenario and whose stopping rule may read the scenario (these are
scenario-aware strategies; wrap the order with :func:`spa_to_pa` to obtain a
partially-adaptive one).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import LPIntegrityError, ValidationError
from ..lp.formulations import LpSolution
from ..model.constraints import SelectOne
from ..model.instance import SearchInstance
from ..model.matroid import Matroid
from ..model.strategy import FixedOrder, LowSetHit, OrderSource, StopState, StoppingRule, Strategy
from .params import DEFAULT_PARAMS, RoundingParams

INTEGRITY_TOL = 1e-7


# -- order sources -----------------------------------------------------------------


class SampledOrder(OrderSource):
    """Each step probes one box drawn i.i.d. with probability proportional to ``weights``."""

    randomized = True

    def __init__(self, weights, max_steps: int | None = None):
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        if w.sum() <= 0:
            raise ValidationError("sampling weights must have positive mass")
        self.weights = w / w.sum()
        self._cdf = np.cumsum(self.weights)
        self._cdf[-1] = 1.0
        self.max_steps = max_steps

    def steps(self, rng):
        t = 0
        while self.max_steps is None or t < self.max_steps:
            t += 1
            yield (int(np.searchsorted(self._cdf, rng.random(), side="right")),)

    def to_json(self):
        return {"kind": "sampled", "weights": self.weights.tolist()}


class PhasedOrder(OrderSource):
    """Phase ``l`` opens each box independently with probability ``q[i, l-1]``.

    Opened boxes are probed in index order; probabilities of phases past
    the table repeat its last column.
    """

    randomized = True

    def __init__(self, q: np.ndarray, max_phases: int):
        self.q = np.asarray(q, dtype=float)
        self.max_phases = max_phases

    def probs(self, phase: int) -> np.ndarray:
        return self.q[:, min(phase, self.q.shape[1]) - 1]

    def steps(self, rng):
        for phase in range(1, self.max_phases + 1):
            q = self.probs(phase)
            yield tuple(np.flatnonzero(rng.random(q.size) < q).tolist())

    def to_json(self):
        return {"kind": "phased", "q": self.q.tolist(), "max_phases": self.max_phases}


class StepwiseOrder(OrderSource):
    """Step ``t`` opens box ``i`` independently with probability ``min(a * X[i, min(t, T)] / t, 1)``.

    ``X`` holds cumulative opening mass per step.
    """

    randomized = True

    def __init__(self, X: np.ndarray, a: float, max_steps: int):
        self.X = np.asarray(X, dtype=float)
        self.a = float(a)
        self.max_steps = max_steps

    def probs(self, t: int) -> np.ndarray:
        return np.minimum(self.a * _prefix(self.X, t) / t, 1.0)

    def steps(self, rng):
        for t in range(1, self.max_steps + 1):
            q = self.probs(t)
            yield tuple(np.flatnonzero(rng.random(q.size) < q).tolist())

    def to_json(self):
        return {"kind": "stepwise", "X": self.X.tolist(), "a": self.a, "max_steps": self.max_steps}


# -- sampled order, stopping proportional to z / x ----------------------------------


class _RatioStopState(StopState):
    def __init__(self, ratio, costs, rng):
        self.ratio = ratio
        self.costs = costs
        self.rng = rng
        self.selected_cost = math.inf

    def after_probe(self, box, cost, step, next_time):
        if self.rng.random() < self.ratio[box]:
            self.selected_cost = cost
            return True
        return False


class RatioStop(StoppingRule):
    """On opening box ``i`` in scenario ``s``, select it and stop w.p. ``z[i, s] / x[i]``."""

    kind = "lp-ratio-stop"

    def __init__(self, ratio: np.ndarray):
        self.ratio = np.asarray(ratio, dtype=float)

    def start(self, instance, constraint, rng, scenario=None):
        if scenario is None:
            raise ValidationError("ratio stopping needs the scenario")
        return _RatioStopState(self.ratio[:, scenario], instance.costs[:, scenario], rng)

    def params(self):
        return {"ratio": self.ratio.tolist()}


def na_stop_ratios(solution: LpSolution) -> np.ndarray:
    """``z[i, s] / x[i]`` with integrity checks."""
    x, z = solution.x, solution.z
    if x.ndim != 1:
        raise ValidationError("expected a non-adaptive LP solution")
    if (z > x[:, None] + INTEGRITY_TOL).any():
        raise LPIntegrityError("z exceeds x in the LP solution")
    bad = (x <= INTEGRITY_TOL)[:, None] & (z > INTEGRITY_TOL)
    if bad.any():
        i, s = np.argwhere(bad)[0]
        raise LPIntegrityError(f"box {i} is selected in scenario {s} but never opened")
    ratio = np.zeros_like(z)
    pos = x > INTEGRITY_TOL
    ratio[pos] = np.clip(z[pos] / x[pos, None], 0.0, 1.0)
    return ratio


def round_na(solution: LpSolution, instance: SearchInstance | None = None, max_steps: int | None = None) -> Strategy:
    """Sample boxes with replacement proportional to ``x``; stop w.p. ``z/x``.

    Re-drawing a box probes it again and pays its probing time again.
    """
    instance = instance or solution.instance
    ratio = na_stop_ratios(solution)
    return Strategy(SampledOrder(solution.x, max_steps), RatioStop(ratio))


def na_stop_probability(solution: LpSolution, scenario: int) -> float:
    """Per-step stopping probability of the sampled rounding in one scenario."""
    x = solution.x
    ratio = na_stop_ratios(solution)
    return float((x / x.sum()) @ ratio[:, scenario])


# -- min-sum set cover reduction ------------------------------------------------------


def build_low_sets(solution: LpSolution, instance: SearchInstance | None = None,
                   alpha: float = DEFAULT_PARAMS.alpha_single) -> list[list[int]]:
    """Boxes costing at most ``alpha`` times the scenario's fractional cost."""
    instance = instance or solution.instance
    out = []
    z_mass = solution.z.sum(axis=2) if solution.z.ndim == 3 else solution.z
    for s in range(instance.m):
        thr = alpha * solution.cost_s[s]
        c = instance.costs[:, s]
        L = np.flatnonzero(c <= thr * (1 + 1e-12) + 1e-12).tolist()
        mass = float(z_mass[L, s].sum()) if L else 0.0
        if instance.probs[s] > 0 and (not L or mass < 1 - 1 / alpha - INTEGRITY_TOL):
            raise LPIntegrityError(
                f"low set of scenario {s} carries fractional mass {mass:.6f} < 1 - 1/alpha"
            )
        out.append(L)
    return out


def greedy_mssc(weights: Sequence[float], covers: Sequence[Sequence[int]], n: int | None = None) -> list[int]:
    """Repeatedly pick the box covering the most uncovered weight (ties: lowest index).

    Boxes that cover nothing new are appended in index order at the end.
    """
    w = np.asarray(weights, dtype=float)
    sets = [set(int(i) for i in c) for c in covers]
    if len(sets) != w.size:
        raise ValidationError("need one cover per element")
    for e, c in enumerate(sets):
        if not c and w[e] > 0:
            raise ValidationError(f"element {e} cannot be covered")
    n = n if n is not None else 1 + max((max(c) for c in sets if c), default=-1)
    incidence = np.zeros((n, w.size))
    for e, c in enumerate(sets):
        incidence[list(c), e] = 1.0
    uncovered = w > 0
    order: list[int] = []
    remaining = list(range(n))
    while uncovered.any():
        gain = incidence[remaining] @ np.where(uncovered, w, 0.0)
        j = int(np.argmax(gain))
        if gain[j] <= 0:
            break
        box = remaining.pop(j)
        order.append(box)
        uncovered &= incidence[box] == 0
    return order + remaining


def mssc_cover_times(order: Sequence[int], covers: Sequence[Sequence[int]], probe_times=None) -> np.ndarray:
    """Elapsed probing time until each element is first covered (inf if never)."""
    order = list(order)
    p = np.ones(max(order) + 1) if probe_times is None else np.asarray(probe_times, dtype=float)
    finish = np.cumsum(p[order])
    pos = {b: k for k, b in enumerate(order)}
    out = np.full(len(covers), math.inf)
    for e, c in enumerate(covers):
        ks = [pos[i] for i in c if i in pos]
        if ks:
            out[e] = finish[min(ks)]
    return out


def round_spa_mssc(solution: LpSolution, instance: SearchInstance | None = None,
                   params: RoundingParams = DEFAULT_PARAMS) -> Strategy:
    """Greedy min-sum-cover order over the low sets; stop at the first low box."""
    instance = instance or solution.instance
    low = build_low_sets(solution, instance, params.alpha_single)
    order = greedy_mssc(instance.probs, low, instance.n)
    return Strategy(FixedOrder(order), LowSetHit(low))


def low_set_costs(instance: SearchInstance, order: Sequence[int], low_sets, constraint=None):
    """Exact per-scenario ``(time, cost)`` of stopping at the first low-set box."""
    constraint = constraint or SelectOne()
    order = list(order)
    finish = np.cumsum(instance.probe_times[order]).astype(float)
    times = np.empty(instance.m)
    costs = np.empty(instance.m)
    for s, L in enumerate(low_sets):
        Ls = set(L)
        k = next((j for j, b in enumerate(order) if b in Ls), len(order) - 1)
        times[s] = finish[k]
        costs[s] = constraint.best_cost(instance.costs[:, s], order[: k + 1])
    return times, costs


# -- phased rounding for k boxes ----------------------------------------------------


def threshold_times(y: np.ndarray) -> np.ndarray:
    """``t_s* = max{t : y[s, t] <= 1/2}`` (0 when no step qualifies)."""
    m, T = y.shape
    out = np.zeros(m, dtype=np.int64)
    for s in range(m):
        idx = np.flatnonzero(y[s] <= 0.5 + 1e-12)
        out[s] = idx[-1] + 1 if idx.size else 0
    return out


def _prefix(arr: np.ndarray, t: int) -> np.ndarray:
    """Cumulative value at step ``min(t, T)`` along the last axis."""
    return arr[..., min(t, arr.shape[-1]) - 1]


def kcover_tables(solution: LpSolution, alpha: float, max_phases: int):
    """Opening probabilities ``q[i, l]`` and selection probabilities ``sel[i, s, l]``.

    Phases past ``log2 T`` repeat the saturated values, so tables stop there.
    """
    X = solution.cumulative_x()
    Z = solution.cumulative_z()
    T = solution.horizon
    L = max(1, min(max_phases, math.ceil(math.log2(T)) if T > 1 else 1))
    q = np.empty((X.shape[0], L))
    sel = np.zeros((Z.shape[0], Z.shape[1], L))
    for l in range(1, L + 1):
        q[:, l - 1] = np.minimum(alpha * _prefix(X, 2**l), 1.0)
        zl = alpha * _prefix(Z, 2**l)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(q[:, l - 1, None] > 0, zl / q[:, l - 1, None], 0.0)
        sel[:, :, l - 1] = np.minimum(r, 1.0)
    return q, sel


class _PhaseState(StopState):
    def __init__(self, sel, tstar, k, costs, rng, table_len):
        self.sel = sel
        self.tstar = tstar
        self.k = k
        self.costs = costs
        self.rng = rng
        self.L = table_len
        self.selected: list[int] = []
        self.selected_cost = math.inf

    def _active(self, step):
        return 2**step >= self.tstar

    def _prob(self, box, step):
        return self.sel[box, min(step, self.L) - 1]

    def _done(self):
        return len(self.selected) >= self.k

    def after_probe(self, box, cost, step, next_time):
        if box in self.selected or not self._active(step):
            return False
        if self.rng.random() < self._prob(box, step):
            self.selected.append(box)
            if self._done():
                self.selected_cost = self._selected_cost()
                return True
        return False

    def _selected_cost(self):
        return float(self.costs[self.selected].sum())


class PhaseSelection(StoppingRule):
    """Select opened boxes with the LP-derived probability once the phase is late enough."""

    kind = "phase-selection"

    def __init__(self, sel: np.ndarray, tstar: np.ndarray, k: int):
        self.sel = np.asarray(sel, dtype=float)
        self.tstar = np.asarray(tstar, dtype=np.int64)
        self.k = int(k)

    def start(self, instance, constraint, rng, scenario=None):
        if scenario is None:
            raise ValidationError("phase selection needs the scenario")
        return _PhaseState(self.sel[:, scenario], int(self.tstar[scenario]), self.k,
                           instance.costs[:, scenario], rng, self.sel.shape[2])

    def params(self):
        return {"k": self.k, "tstar": self.tstar.tolist(), "sel": self.sel.tolist()}


def round_kcover(solution: LpSolution, instance: SearchInstance | None = None, k: int | None = None,
                 params: RoundingParams = DEFAULT_PARAMS) -> Strategy:
    """Phased rounding for selecting ``k`` boxes."""
    k = k or solution.k
    if solution.y is None or k is None:
        raise ValidationError("round_kcover needs a k-cover LP solution")
    q, sel = kcover_tables(solution, params.alpha_k, params.max_phases)
    tstar = threshold_times(solution.y)
    return Strategy(PhasedOrder(q, params.max_phases), PhaseSelection(sel, tstar, k))


# -- per-step rounding for matroid bases ---------------------------------------------


def matroid_tables(solution: LpSolution, alpha: float, k: int):
    """Opening mass ``X`` (n, T), selection mass ``Z`` (n, m, T) and the factor ``alpha ln k``."""
    return solution.cumulative_x(), solution.cumulative_z(), alpha * math.log(k)


def matroid_selection_probs(X, Z, a, t: int, s: int) -> np.ndarray:
    """Selection probability of each box opened at step ``t`` in scenario ``s``."""
    q = np.minimum(a * _prefix(X, t) / t, 1.0)
    zt = a * _prefix(Z[:, s, :], t) / t
    safe = np.where(q > 0, q, 1.0)
    return np.where(q > 0, np.minimum(zt / safe, 1.0), 0.0)


class _MatroidState(_PhaseState):
    def __init__(self, rule, scenario, tstar, costs, rng):
        super().__init__(None, tstar, rule.matroid.full_rank, costs, rng, 0)
        self.rule = rule
        self.scenario = scenario
        self.matroid = rule.matroid
        self._cache_step = None
        self._cache = None

    def _active(self, step):
        return step > self.tstar

    def _prob(self, box, step):
        if self._cache_step != step:
            r = self.rule
            self._cache = matroid_selection_probs(r.X, r.Z, r.a, step, self.scenario)
            self._cache_step = step
        return self._cache[box]

    def _done(self):
        return self.matroid.rank(self.selected) >= self.matroid.full_rank

    def _selected_cost(self):
        basis = self.matroid.min_weight_basis(self.costs, self.selected)
        return float(self.costs[basis].sum())


class MatroidSelection(StoppingRule):
    """Select boxes opened after the scenario's threshold step until they span the matroid."""

    kind = "matroid-selection"

    def __init__(self, X, Z, a: float, tstar, matroid: Matroid):
        self.X = np.asarray(X, dtype=float)
        self.Z = np.asarray(Z, dtype=float)
        self.a = float(a)
        self.tstar = np.asarray(tstar, dtype=np.int64)
        self.matroid = matroid

    def start(self, instance, constraint, rng, scenario=None):
        if scenario is None:
            raise ValidationError("matroid selection needs the scenario")
        return _MatroidState(self, scenario, int(self.tstar[scenario]), instance.costs[:, scenario], rng)

    def params(self):
        return {"X": self.X.tolist(), "Z": self.Z.tolist(), "a": self.a, "tstar": self.tstar.tolist(),
                "matroid": self.matroid.to_dict()}


def round_matroid(solution: LpSolution, instance: SearchInstance | None = None, matroid: Matroid | None = None,
                  params: RoundingParams = DEFAULT_PARAMS) -> Strategy:
    """Per-step rounding for matroid bases; rank 1 falls back to the k-cover rounding."""
    if matroid is None:
        raise ValidationError("round_matroid needs the matroid")
    k = matroid.full_rank
    if k == 1:
        return round_kcover(solution, instance, 1, params)
    X, Z, a = matroid_tables(solution, params.alpha_matroid, k)
    tstar = threshold_times(solution.y)
    return Strategy(StepwiseOrder(X, a, params.max_steps), MatroidSelection(X, Z, a, tstar, matroid))
