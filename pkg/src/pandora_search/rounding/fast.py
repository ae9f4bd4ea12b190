"""Vectorised Monte-Carlo evaluation of the roundings.

Each function simulates all trials of one scenario at once and returns the
same :class:`PAEstimate` as :func:`evaluate_pa` on the matching strategy.
The random streams differ from the generic engine, so results agree in
distribution, not draw for draw. One child seed per scenario keeps every
scenario's sample independent of the others.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..lp.formulations import LpSolution
from ..model.constraints import SelectK, SelectOne
from ..model.instance import SearchInstance
from ..model.matroid import Matroid
from ..model.strategy import PAEstimate, stratified_counts, summarize
from ..ski import sample_buy_days
from .algorithms import (
    StepwiseOrder,
    kcover_tables,
    matroid_selection_probs,
    matroid_tables,
    na_stop_ratios,
    threshold_times,
)
from .params import DEFAULT_PARAMS, RoundingParams

MAX_SAMPLED_STEPS = 1 << 16


def _scenario_rngs(seed, m: int) -> list[np.random.Generator]:
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(m)]


class _Trials:
    """Per-trial accumulators for one scenario."""

    def __init__(self, N: int, n: int):
        self.time = np.zeros(N)
        self.probed = np.zeros((N, n), dtype=bool)
        self.done = np.zeros(N, dtype=bool)
        self.selected = np.full(N, np.inf)

    def probe(self, rows, mask, p, repay):
        """Add the probing time of ``mask`` (rows x n) to ``rows``."""
        pay = mask if repay else mask & ~self.probed[rows]
        self.time[rows] += pay @ p
        self.probed[rows] |= mask


class _Collector:
    def __init__(self, instance: SearchInstance, trials: int):
        self.instance = instance
        self.counts = stratified_counts(instance.probs, trials)
        self.scen, self.totals, self.times, self.costs, self.sel = [], [], [], [], []
        self.forced = 0

    def add(self, s, acc: _Trials, cost, forced_mask):
        sel = np.where(np.isfinite(acc.selected), acc.selected, cost)
        self.scen.append(np.full(acc.time.size, s))
        self.times.append(acc.time)
        self.costs.append(cost)
        self.totals.append(acc.time + cost)
        self.sel.append(acc.time + sel)
        self.forced += int(forced_mask.sum())

    def result(self) -> PAEstimate:
        cat = np.concatenate
        return summarize(self.instance, cat(self.scen), cat(self.totals), cat(self.times), cat(self.costs),
                         cat(self.sel), self.forced)


def fast_round_na(solution: LpSolution, instance: SearchInstance | None = None, trials: int = 1000,
                  seed: int | None = 0, *, ski: bool = False, repay_duplicates: bool = True,
                  max_steps: int = MAX_SAMPLED_STEPS) -> PAEstimate:
    """Sampled rounding of the non-adaptive LP, optionally stopped by ski rental.

    With ``ski=False`` the run stops by the scenario-aware ``z/x`` coin; with
    ``ski=True`` the same sampled order is stopped by the ski-rental rule fed
    the running minimum of observed costs, which never reads the scenario.
    """
    instance = instance or solution.instance
    ratio = na_stop_ratios(solution)
    w = np.clip(solution.x, 0.0, None)
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    p = instance.probe_times.astype(float)
    out = _Collector(instance, trials)
    for s, rng in enumerate(_scenario_rngs(seed, instance.m)):
        N = int(out.counts[s])
        if N == 0:
            continue
        c = instance.costs[:, s]
        acc = _Trials(N, instance.n)
        best = np.full(N, np.inf)
        # ski state: unit clock, current threshold C, scheduled buy step
        unit = np.zeros(N, dtype=np.int64)
        C = np.full(N, np.inf)
        tau = np.full(N, np.iinfo(np.int64).max)
        box = np.searchsorted(cdf, rng.random(N), side="right")
        steps = 0
        while steps < max_steps and not acc.done.all():
            steps += 1
            rows = np.flatnonzero(~acc.done)
            b = box[rows]
            mask = np.zeros((rows.size, instance.n), dtype=bool)
            mask[np.arange(rows.size), b] = True
            acc.probe(rows, mask, p, repay_duplicates)
            best[rows] = np.minimum(best[rows], c[b])
            nxt = np.searchsorted(cdf, rng.random(rows.size), side="right")
            if ski:
                a = best[rows]
                u1 = unit[rows] + 1
                restart = a + u1 - 1 < C[rows]
                if restart.any():
                    r = rows[restart]
                    C[r] = a[restart] + u1[restart] - 1
                    tau[r] = u1[restart] - 1 + sample_buy_days(a[restart], rng.random(r.size))
                rent = p[nxt].astype(np.int64)
                stop = tau[rows] <= unit[rows] + rent
                unit[rows] += rent
                acc.selected[rows[stop]] = best[rows[stop]]
            else:
                stop = rng.random(rows.size) < ratio[b, s]
                acc.selected[rows[stop]] = c[b[stop]]
            acc.done[rows[stop]] = True
            box[rows] = nxt
        cost = SelectOne().best_cost_masks(acc.probed, c)
        out.add(s, acc, cost, ~acc.done)
    return out.result()


def fast_round_kcover(solution: LpSolution, instance: SearchInstance | None = None, k: int | None = None,
                      trials: int = 1000, seed: int | None = 0, *, params: RoundingParams = DEFAULT_PARAMS,
                      repay_duplicates: bool = True) -> PAEstimate:
    """Phased rounding for selecting ``k`` boxes."""
    instance = instance or solution.instance
    k = k or solution.k
    if k is None or solution.y is None:
        raise ValidationError("fast_round_kcover needs a k-cover LP solution")
    q, sel = kcover_tables(solution, params.alpha_k, params.max_phases)
    L = q.shape[1]
    tstar = threshold_times(solution.y)
    p = instance.probe_times.astype(float)
    n = instance.n
    idx = np.arange(n)
    out = _Collector(instance, trials)
    for s, rng in enumerate(_scenario_rngs(seed, instance.m)):
        N = int(out.counts[s])
        if N == 0:
            continue
        c = instance.costs[:, s]
        acc = _Trials(N, n)
        chosen = np.zeros((N, n), dtype=bool)
        for phase in range(1, params.max_phases + 1):
            rows = np.flatnonzero(~acc.done)
            if rows.size == 0:
                break
            col = min(phase, L) - 1
            opened = rng.random((rows.size, n)) < q[:, col]
            draw = rng.random((rows.size, n))
            if 2**phase >= tstar[s]:
                cand = opened & ~chosen[rows] & (draw < sel[:, s, col])
            else:
                cand = np.zeros_like(opened)
            count = chosen[rows].sum(axis=1)[:, None] + np.cumsum(cand, axis=1)
            reach = count >= k
            hit = reach.any(axis=1)
            last = np.where(hit, reach.argmax(axis=1), n - 1)
            within = idx[None, :] <= last[:, None]
            acc.probe(rows, opened & within, p, repay_duplicates)
            chosen[rows] |= cand & within
            acc.done[rows[hit]] = True
        fin = acc.done
        acc.selected[fin] = np.where(chosen[fin], c, 0.0).sum(axis=1)
        cost = SelectK(k).best_cost_masks(acc.probed, c)
        out.add(s, acc, cost, ~acc.done)
    return out.result()


def fast_round_matroid(solution: LpSolution, matroid: Matroid, instance: SearchInstance | None = None,
                       trials: int = 1000, seed: int | None = 0, *, params: RoundingParams = DEFAULT_PARAMS,
                       repay_duplicates: bool = True) -> PAEstimate:
    """Per-step rounding for matroid bases (rank 1 uses the phased rounding)."""
    from ..model.constraints import MatroidBasis

    instance = instance or solution.instance
    k = matroid.full_rank
    if k == 1:
        return fast_round_kcover(solution, instance, 1, trials, seed, params=params,
                                 repay_duplicates=repay_duplicates)
    X, Z, a = matroid_tables(solution, params.alpha_matroid, k)
    order = StepwiseOrder(X, a, params.max_steps)
    tstar = threshold_times(solution.y)
    p = instance.probe_times.astype(float)
    n = instance.n
    idx = np.arange(n)
    bits = 1 << idx
    ranks: dict[int, int] = {}

    def rank_of(mask_row) -> int:
        key = int(mask_row @ bits)
        if key not in ranks:
            ranks[key] = matroid.rank(np.flatnonzero(mask_row).tolist())
        return ranks[key]

    constraint = MatroidBasis(matroid)
    out = _Collector(instance, trials)
    for s, rng in enumerate(_scenario_rngs(seed, instance.m)):
        N = int(out.counts[s])
        if N == 0:
            continue
        c = instance.costs[:, s]
        acc = _Trials(N, n)
        chosen = np.zeros((N, n), dtype=bool)
        for t in range(1, params.max_steps + 1):
            rows = np.flatnonzero(~acc.done)
            if rows.size == 0:
                break
            opened = rng.random((rows.size, n)) < order.probs(t)
            draw = rng.random((rows.size, n))
            last = np.full(rows.size, n - 1)
            hit = np.zeros(rows.size, dtype=bool)
            if t > tstar[s]:
                cand = opened & ~chosen[rows] & (draw < matroid_selection_probs(X, Z, a, t, s))
                for j in np.flatnonzero(cand.any(axis=1)):
                    cur = chosen[rows[j]].copy()
                    for i in np.flatnonzero(cand[j]):
                        cur[i] = True
                        if rank_of(cur) == k:
                            last[j], hit[j] = i, True
                            break
            else:
                cand = np.zeros_like(opened)
            within = idx[None, :] <= last[:, None]
            acc.probe(rows, opened & within, p, repay_duplicates)
            chosen[rows] |= cand & within
            acc.done[rows[hit]] = True
        for r in np.flatnonzero(acc.done):
            basis = matroid.min_weight_basis(c, np.flatnonzero(chosen[r]))
            acc.selected[r] = float(c[basis].sum())
        cost = constraint.best_cost_masks(acc.probed, c)
        out.add(s, acc, cost, ~acc.done)
    return out.result()
