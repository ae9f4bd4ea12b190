"""Instance families: random benchmarks and the hardness constructions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..model.instance import SearchInstance
from ..model.matroid import Matroid, PartitionMatroid

FAMILIES = ("random-uniform", "random-correlated", "setcover-lb", "partition-matroid-lb", "mssc-pure",
            "general-times")

SETCOVER_P = 0.22
SETCOVER_H_FACTOR = 4.59
MAX_EXPLICIT_K = 4


@dataclass
class GeneratorSpec:
    family: str
    n: int = 4
    m: int = 4
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"family": self.family, "n": self.n, "m": self.m, "seed": self.seed, "params": self.params}


def _round(a: np.ndarray, digits: int = 2) -> np.ndarray:
    # short decimals keep JSON round trips exact
    return np.round(a, digits)


def _sprinkle_inf(rng, costs: np.ndarray, rate: float, keep: int) -> np.ndarray:
    """Set entries to inf w.p. ``rate`` while leaving ``keep`` finite boxes per scenario."""
    if rate <= 0:
        return costs
    n, m = costs.shape
    out = costs.copy()
    for s in range(m):
        safe = rng.choice(n, size=min(keep, n), replace=False)
        drop = rng.random(n) < rate
        drop[safe] = False
        out[drop, s] = np.inf
    return out


def random_uniform(n: int, m: int, seed: int = 0, cmax: float = 10.0, inf_rate: float = 0.0,
                   keep_finite: int = 1, probe_times: Sequence[int] | None = None) -> SearchInstance:
    """Independent uniform costs on ``[0, cmax]``, uniform scenario weights."""
    rng = np.random.default_rng(seed)
    costs = _round(rng.uniform(0.0, cmax, (n, m)))
    costs = _sprinkle_inf(rng, costs, inf_rate, keep_finite)
    return SearchInstance(costs, None, probe_times)


def random_correlated(n: int, m: int, seed: int = 0, types: int = 2, cmax: float = 10.0,
                      noise: float = 1.0) -> SearchInstance:
    """Scenarios drawn around a few latent cost profiles, with random weights."""
    rng = np.random.default_rng(seed)
    profiles = rng.uniform(0.0, cmax, (n, max(1, types)))
    kind = rng.integers(0, profiles.shape[1], m)
    costs = np.clip(profiles[:, kind] + rng.normal(0.0, noise, (n, m)), 0.0, None)
    probs = rng.dirichlet(np.ones(m))
    probs = np.round(probs, 6)
    probs[-1] = 1.0 - probs[:-1].sum()
    if probs[-1] < 0:
        probs = np.full(m, 1.0 / m)
    return SearchInstance(_round(costs), probs)


def general_times(n: int, m: int, seed: int = 0, P: int = 3, **kw) -> SearchInstance:
    """``random_uniform`` with integral probing times drawn from ``1..P``."""
    rng = np.random.default_rng([seed, 7])
    p = rng.integers(1, P + 1, n)
    return random_uniform(n, m, seed, probe_times=p.tolist(), **kw)


def set_cover_value(sets: Sequence[Sequence[int]], universe: int) -> int:
    """Smallest number of sets covering ``range(universe)`` (exhaustive)."""
    full = set(range(universe))
    for r in range(1, len(sets) + 1):
        for combo in itertools.combinations(sets, r):
            if set().union(*map(set, combo)) >= full:
                return r
    raise ValidationError("the sets do not cover the universe")


def random_set_cover(num_sets: int, universe: int, rng, density: float = 0.4) -> list[list[int]]:
    sets = [sorted(np.flatnonzero(rng.random(universe) < density).tolist()) for _ in range(num_sets)]
    for e in range(universe):
        if not any(e in s for s in sets):
            sets[int(rng.integers(num_sets))].append(e)
    return [sorted(set(s)) for s in sets]


def setcover_lb(sets: Sequence[Sequence[int]] | None = None, universe: int | None = None, seed: int = 0,
                p: float = SETCOVER_P, h_factor: float = SETCOVER_H_FACTOR, num_sets: int = 3) -> SearchInstance:
    """Boxes are sets, scenarios are elements plus one all-expensive scenario.

    Box ``i`` costs 0 in element scenario ``j`` when set ``i`` contains
    ``j`` and ``H`` otherwise; the extra scenario has weight ``p`` and
    costs ``H`` everywhere. ``H = h_factor`` times the set-cover optimum.
    """
    if not 0 <= p < 1:
        raise ValidationError("p must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    if sets is None:
        universe = universe or 4
        sets = random_set_cover(num_sets, universe, rng)
    universe = universe if universe is not None else 1 + max(max(s) for s in sets if s)
    H = h_factor * set_cover_value(sets, universe)
    costs = np.full((len(sets), universe + 1), H)
    for i, S in enumerate(sets):
        for e in S:
            costs[i, e] = 0.0
    probs = np.full(universe + 1, (1 - p) / universe)
    probs[-1] = p
    return SearchInstance(costs, probs)


def partition_matroid_lb(k: int = 2, sets: Sequence[Sequence[int]] | None = None, universe: int | None = None,
                         seed: int = 0, samples: int = 64) -> tuple[SearchInstance, Matroid]:
    """Rank-``k`` partition matroid with one segment per coordinate.

    Each segment holds a copy of the ground elements; a scenario picks one
    of the ``k`` sets per segment, making that set's copies free and every
    other box in the segment unusable. All ``k**k`` scenarios are listed
    for ``k <= 4``; larger ``k`` uses ``samples`` uniform draws.
    """
    if k < 1:
        raise ValidationError("k must be positive")
    rng = np.random.default_rng(seed)
    if sets is None:
        universe = universe or max(2, k)
        sets = random_set_cover(k, universe, rng, density=0.5)
    if len(sets) != k:
        raise ValidationError(f"need exactly k={k} sets")
    universe = universe if universe is not None else 1 + max(max(s) for s in sets if s)
    if k <= MAX_EXPLICIT_K:
        choices = list(itertools.product(range(k), repeat=k))
    else:
        choices = [tuple(rng.integers(0, k, k).tolist()) for _ in range(samples)]
    n = k * universe
    costs = np.full((n, len(choices)), np.inf)
    for s, pick in enumerate(choices):
        for seg, j in enumerate(pick):
            for e in sets[j]:
                costs[seg * universe + e, s] = 0.0
    segments = [list(range(seg * universe, (seg + 1) * universe)) for seg in range(k)]
    return SearchInstance(costs), PartitionMatroid(segments, [1] * k)


def mssc_pure(covers: Sequence[Sequence[int]] | None = None, n: int | None = None, m: int | None = None,
              seed: int = 0, density: float = 0.35, probs=None) -> SearchInstance:
    """0/inf costs: box ``i`` is free in scenario ``s`` iff ``i`` covers ``s``."""
    rng = np.random.default_rng(seed)
    if covers is None:
        n, m = n or 4, m or 4
        covers = []
        for _ in range(m):
            c = np.flatnonzero(rng.random(n) < density).tolist() or [int(rng.integers(n))]
            covers.append(c)
    n = n if n is not None else 1 + max(max(c) for c in covers)
    costs = np.full((n, len(covers)), np.inf)
    for s, c in enumerate(covers):
        if not c:
            raise ValidationError(f"scenario {s} has no covering box")
        costs[list(c), s] = 0.0
    return SearchInstance(costs, probs)


def generate(spec: GeneratorSpec) -> tuple[SearchInstance, Matroid | None]:
    """Build the instance (and matroid, for matroid families) described by ``spec``."""
    f, kw = spec.family, dict(spec.params)
    if spec.n < 1 or spec.m < 1:
        raise ValidationError("n and m must be positive")
    if f == "random-uniform":
        return random_uniform(spec.n, spec.m, spec.seed, **kw), None
    if f == "random-correlated":
        return random_correlated(spec.n, spec.m, spec.seed, **kw), None
    if f == "general-times":
        return general_times(spec.n, spec.m, spec.seed, **kw), None
    if f == "setcover-lb":
        kw.setdefault("num_sets", spec.n)
        kw.setdefault("universe", spec.m)
        return setcover_lb(seed=spec.seed, **kw), None
    if f == "partition-matroid-lb":
        return partition_matroid_lb(seed=spec.seed, **kw)
    if f == "mssc-pure":
        kw.setdefault("n", spec.n)
        kw.setdefault("m", spec.m)
        return mssc_pure(seed=spec.seed, **kw), None
    raise ValidationError(f"unknown family {f!r}; choose from {', '.join(FAMILIES)}")


def sample_scenarios(instance: SearchInstance, m: int, seed: int = 0) -> SearchInstance:
    """``m`` i.i.d. scenario draws from ``instance``, each with weight ``1/m``."""
    if m < 1:
        raise ValidationError("need at least one sample")
    rng = np.random.default_rng(seed)
    idx = rng.choice(instance.m, size=m, p=instance.probs)
    return SearchInstance(instance.costs[:, idx], None, instance.probe_times)


def empirical_weights(instance: SearchInstance, m: int, seed: int = 0) -> np.ndarray:
    """Sampled frequency of each source scenario (same draws as :func:`sample_scenarios`)."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(instance.m, size=m, p=instance.probs)
    return np.bincount(idx, minlength=instance.m) / m


def concentration_failures(instance: SearchInstance, orders, m: int, reps: int, eps: float, seed: int = 0,
                           constraint=None) -> np.ndarray:
    """Fraction of repetitions whose empirical SPA cost misses the true one by more than ``eps``.

    Uses per-scenario costs of each order, so one draw of sample counts
    gives every order's empirical cost at once.
    """
    from ..model.evaluate import spa_scenario_costs

    per = np.array([spa_scenario_costs(instance, o, constraint)[0] for o in orders])  # (orders, m)
    true = per @ instance.probs
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(m, instance.probs, size=reps)  # (reps, m_source)
    emp = counts @ per.T / m
    return (np.abs(emp - true) > eps * true).mean(axis=0)


__all__ = [
    "FAMILIES", "GeneratorSpec", "concentration_failures", "empirical_weights", "general_times", "generate",
    "mssc_pure", "partition_matroid_lb", "random_correlated", "random_set_cover", "random_uniform",
    "sample_scenarios", "set_cover_value", "setcover_lb",
]
