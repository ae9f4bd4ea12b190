"""Ski rental with non-increasing buy prices, general rents, and the
conversion of scenario-aware stopping into an online stopping rule.

Time is counted in unit steps. Buying at step ``t`` of a unit-rent instance
costs ``t - 1 + a_t``. With general rents, buying at index ``j`` costs
``sum(p[:j-1]) + a_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .model.constraints import FeasibilityConstraint, SelectK, SelectOne
from .model.evaluate import expectation
from .model.instance import SearchInstance
from .model.strategy import StopState, StoppingRule

E_RATIO = math.e / (math.e - 1)


def classic_buy_distribution(B: int) -> np.ndarray:
    """Buy-day distribution of the randomized rule for buy price ``B``.

    Day ``i`` (1-based) has probability proportional to ``(1 - 1/B)**(B - i)``.
    """
    if int(B) != B or B < 1:
        raise ValidationError("classic buy distribution needs an integer B >= 1")
    B = int(B)
    w = (1.0 - 1.0 / B) ** (B - np.arange(1, B + 1))
    return w / w.sum()


def _is_integral(B: float) -> bool:
    return float(B).is_integer()


def buy_day_pmf(B: float) -> np.ndarray:
    """Distribution of ``ski(B)`` for any buy price ``B >= 0``.

    Integral prices use the classic distribution. Other prices use the
    continuous rule (buy at real time ``x`` with density proportional to
    ``exp(x/B)`` on ``[0, B)``) floored to whole days, which keeps the
    ``e/(e-1)`` guarantee for fractional prices. ``B <= 1`` buys on day 1.
    """
    if not B >= 0 or math.isinf(B):
        raise ValidationError(f"buy price must be finite and nonnegative, got {B}")
    if B <= 1:
        return np.ones(1)
    if _is_integral(B):
        return classic_buy_distribution(int(B))
    days = np.arange(1, math.ceil(B) + 1)
    cdf = np.minimum(1.0, np.expm1(days / B) / (math.e - 1))
    cdf[-1] = 1.0
    return np.diff(cdf, prepend=0.0)


def sample_buy_day(B: float, u: float) -> int:
    """Inverse-CDF draw of ``ski(B)`` from a uniform ``u`` in ``[0, 1)``."""
    if B <= 1:
        return 1
    if _is_integral(B):
        B = int(B)
        rho = 1.0 - 1.0 / B
        floor = rho**B
        v = u * (1.0 - floor) + floor
        d = math.ceil(B - math.log(v) / math.log(rho)) if v > 0 else 1
        return min(max(d, 1), B)
    x = B * math.log1p(u * (math.e - 1))
    return min(int(math.floor(x)) + 1, math.ceil(B))


def sample_buy_days(B: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorised :func:`sample_buy_day` over arrays of prices and uniforms."""
    B = np.asarray(B, dtype=float)
    u = np.asarray(u, dtype=float)
    out = np.ones(B.shape, dtype=np.int64)
    big = B > 1
    integral = big & (B == np.floor(B))
    frac = big & ~integral
    if integral.any():
        b = B[integral]
        rho = 1.0 - 1.0 / b
        floor = rho**b
        v = u[integral] * (1.0 - floor) + floor
        with np.errstate(divide="ignore"):
            d = np.ceil(b - np.log(v) / np.log(rho))
        out[integral] = np.clip(np.nan_to_num(d, nan=1.0, posinf=1.0, neginf=1.0), 1, b).astype(np.int64)
    if frac.any():
        b = B[frac]
        x = b * np.log1p(u[frac] * (math.e - 1))
        out[frac] = np.minimum(np.floor(x).astype(np.int64) + 1, np.ceil(b).astype(np.int64))
    return out


@dataclass(frozen=True)
class SkiInstance:
    buy: tuple
    rent: tuple

    def __init__(self, buy: Sequence[float], rent: Sequence[int] | None = None):
        a = tuple(float(v) for v in buy)
        if not a:
            raise ValidationError("buy sequence must be nonempty")
        if any(math.isnan(v) or v < 0 for v in a):
            raise ValidationError("buy prices must be nonnegative")
        for t in range(1, len(a)):
            if a[t] > a[t - 1]:
                raise ValidationError(f"buy prices must be non-increasing (a[{t}]={a[t]} > a[{t - 1}]={a[t - 1]})")
        if math.isinf(a[-1]):
            raise ValidationError("buy sequence must end with a finite price")
        p = (1,) * len(a) if rent is None else tuple(rent)
        if len(p) != len(a):
            raise ValidationError("need one rent per buy price")
        if any(int(v) != v or v < 1 for v in p):
            raise ValidationError("rents must be integers >= 1")
        object.__setattr__(self, "buy", a)
        object.__setattr__(self, "rent", tuple(int(v) for v in p))

    def __len__(self):
        return len(self.buy)

    @property
    def unit_rent(self) -> bool:
        return all(v == 1 for v in self.rent)

    def elapsed(self) -> np.ndarray:
        """Rent paid before each index: ``sum(p[:j-1])`` for ``j = 1..L``."""
        return np.concatenate([[0], np.cumsum(self.rent[:-1])]).astype(float)

    def offline_opt(self) -> float:
        return float(np.min(self.elapsed() + np.array(self.buy)))

    def unit_expansion(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit-rent buy prices and the index each unit step belongs to."""
        idx = np.repeat(np.arange(len(self.buy)), self.rent)
        return np.array(self.buy)[idx], idx


@dataclass(frozen=True)
class SkiOutcome:
    stop_time: int
    total_cost: float
    offline_opt: float

    @property
    def ratio(self) -> float:
        return self.total_cost / self.offline_opt if self.offline_opt > 0 else (1.0 if self.total_cost == 0 else math.inf)


class VaryingBuySki:
    """Online unit-rent process for non-increasing buy prices.

    Feed one price per unit step; ``offer`` returns True when the process
    buys at that step. Infinite prices never trigger a restart, so the
    process simply rents until the first finite price.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.t = 0
        self.C = math.inf
        self.tau = math.inf
        self.restarts = 0

    def offer(self, a: float) -> bool:
        self.t += 1
        if a + self.t - 1 < self.C:
            self.C = a + self.t - 1
            self.tau = self.t - 1 + sample_buy_day(a, self.rng.random())
            self.restarts += 1
        return self.t == self.tau


class GeneralRentSki:
    """Online process for integral rents: each index is a block of unit steps.

    The unit process is simulated over the whole block; if it would buy
    anywhere inside, we buy at the start of the block.
    """

    def __init__(self, rng: np.random.Generator):
        self.unit = VaryingBuySki(rng)

    def offer(self, a: float, rent: int) -> bool:
        bought = False
        for _ in range(int(rent)):
            if self.unit.offer(a):
                bought = True
                break
        return bought


def run_general_rent(instance: SkiInstance, rng: np.random.Generator) -> SkiOutcome:
    """Play the general-rent process on a fixed sequence, padding with its last entry."""
    proc = GeneralRentSki(rng)
    elapsed = 0
    j = 0
    L = len(instance)
    while True:
        a = instance.buy[min(j, L - 1)]
        p = instance.rent[min(j, L - 1)]
        if proc.offer(a, p):
            return SkiOutcome(j + 1, elapsed + a, instance.offline_opt())
        elapsed += p
        j += 1


def run_varying_buy(instance: SkiInstance, rng: np.random.Generator) -> SkiOutcome:
    """Play the unit-rent process on a fixed sequence, padding with its last entry."""
    if not instance.unit_rent:
        raise ValidationError("run_varying_buy needs unit rents; use run_general_rent")
    return run_general_rent(instance, rng)


def unit_buy_time_pmf(buy: Sequence[float], force_last: bool = False) -> np.ndarray:
    """Exact distribution of the unit-rent buy step.

    Step times are deterministic, so the buy step is the first restart ``k``
    whose drawn ``tau_k`` falls before the next restart. Without
    ``force_last`` the sequence is padded with its last value until every
    draw resolves; with it, any mass past the end is moved to the last step.
    """
    a = np.asarray(buy, dtype=float)
    L = a.size
    restarts = []
    C = math.inf
    for t in range(1, L + 1):
        if a[t - 1] + t - 1 < C:
            C = a[t - 1] + t - 1
            restarts.append(t)
    if not restarts:
        if not force_last:
            raise ValidationError("buy sequence is never finite")
        out = np.zeros(L)
        out[-1] = 1.0
        return out
    horizon = L if force_last else L + int(math.ceil(a[-1])) + 1
    out = np.zeros(horizon)
    surv = 1.0
    for k, t in enumerate(restarts):
        d = buy_day_pmf(float(a[t - 1]))
        times = t - 1 + np.arange(1, d.size + 1)
        nxt = restarts[k + 1] if k + 1 < len(restarts) else math.inf
        hit = times < nxt
        inside = hit & (times <= horizon)
        np.add.at(out, times[inside] - 1, surv * d[inside])
        if force_last:
            out[-1] += surv * d[hit & (times > horizon)].sum()
        surv *= d[~hit].sum()
    return out


def expected_cost_general_rent(instance: SkiInstance, force_last: bool = False) -> float:
    """Exact expected cost of the general-rent process (unit rents included)."""
    unit_buy, idx = instance.unit_expansion()
    pmf = unit_buy_time_pmf(unit_buy, force_last=force_last)
    L = len(instance)
    elapsed = instance.elapsed()
    # unit steps past the expansion belong to padded copies of the last index
    extra = pmf.size - idx.size
    if extra > 0:
        pad_idx = L - 1 + 1 + np.arange(extra) // instance.rent[-1]
        idx = np.concatenate([idx, pad_idx])
    j = idx[: pmf.size]
    last = instance.buy[-1]
    buy = np.array([instance.buy[i] if i < L else last for i in j])
    start = np.where(j < L, elapsed[np.minimum(j, L - 1)], elapsed[-1] + (j - (L - 1)) * instance.rent[-1])
    mask = pmf > 0
    return float(np.dot(pmf[mask], start[mask] + buy[mask]))


def expected_cost_varying_buy(instance: SkiInstance) -> float:
    """Exact expected cost of the unit-rent process."""
    if not instance.unit_rent:
        raise ValidationError("expected_cost_varying_buy needs unit rents")
    return expected_cost_general_rent(instance)


# -- conversion of an order into an online stopping rule -----------------------


class _SkiState(StopState):
    def __init__(self, n, constraint, rng):
        self.constraint = constraint
        self.seen = np.full(n, math.inf)
        self.probed: set[int] = set()
        self.best = math.inf
        self.single = isinstance(constraint, SelectK) and constraint.k == 1
        self.proc = GeneralRentSki(rng)

    def after_probe(self, box, cost, step, next_time):
        if box not in self.probed:
            self.probed.add(box)
            self.seen[box] = cost
            if self.single:
                self.best = min(self.best, cost)
            else:
                self.best = self.constraint.best_cost(self.seen, self.probed)
        if next_time is None:
            return True
        return self.proc.offer(self.best, next_time)


class SkiRentalDriven(StoppingRule):
    """Stop when a ski-rental process, fed the running best feasible cost, buys.

    Renting means probing the next box (rent = its probing time); buying
    means stopping with the best feasible selection seen so far. The rule
    only observes probed costs.
    """

    kind = "ski-rental"
    scenario_aware = False

    def __init__(self, order=None, constraint: FeasibilityConstraint | None = None):
        self.order = None if order is None else tuple(int(i) for i in order)
        self.constraint = constraint

    def start(self, instance, constraint, rng, scenario=None):
        return _SkiState(instance.n, self.constraint or constraint, rng)

    def params(self):
        out = {}
        if self.order is not None:
            out["order"] = list(self.order)
        if self.constraint is not None:
            out["constraint"] = self.constraint.to_text()
        return out


def spa_to_pa(order=None, constraint: FeasibilityConstraint | None = None) -> SkiRentalDriven:
    """Online stopping rule whose cost is within ``e/(e-1)`` of the best prefix."""
    return SkiRentalDriven(order, constraint)


def ski_instance_for_order(instance: SearchInstance, order: Sequence[int], scenario: int,
                           constraint: FeasibilityConstraint | None = None) -> SkiInstance:
    """Buy prices and rents seen by the rule along a fixed order in one scenario.

    The first probe is paid up front and is not part of the ski instance.
    The last rent is a placeholder: the rule is forced to stop there.
    """
    constraint = constraint or SelectOne()
    order = list(order)
    best = constraint.prefix_best(order, instance.costs[:, scenario])
    rents = [int(instance.probe_times[i]) for i in order[1:]] + [1]
    return SkiInstance(best, rents)


def expected_pa_cost(instance: SearchInstance, order: Sequence[int],
                     constraint: FeasibilityConstraint | None = None) -> float:
    """Exact expected total cost of ``order`` with the ski-rental stopping rule."""
    constraint = constraint or SelectOne()
    order = [int(i) for i in order]
    first = float(instance.probe_times[order[0]])
    per = np.empty(instance.m)
    for s in range(instance.m):
        best = constraint.prefix_best(order, instance.costs[:, s])
        if math.isinf(best[-1]):
            per[s] = math.inf
            continue
        ski = ski_instance_for_order(instance, order, s, constraint)
        per[s] = first + expected_cost_general_rent(ski, force_last=True)
    return expectation(instance, per)
