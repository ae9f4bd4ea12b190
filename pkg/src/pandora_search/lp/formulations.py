"""LP relaxations for non-adaptive, scenario-aware, min-sum-cover, k-cover and
matroid-basis search, for unit and general probing times.

Time-indexed formulations use steps ``t = 1..T`` with ``T`` the total probing
time of all boxes. ``x[i, t]`` means box ``i`` *finishes* probing at step
``t``, so it only exists for ``t >= p_i``; ``z[i, s, t]`` selects box ``i``
for scenario ``s`` at that step and only exists when ``c[i, s]`` is finite.
Objectives weight scenario ``s`` by its probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InfeasibleInstanceError, ValidationError
from ..model.constraints import FeasibilityConstraint, MatroidBasis, SelectK, SelectOne, check_satisfiable
from ..model.instance import SearchInstance
from ..model.matroid import Matroid
from .problem import EQ, GE, LE, LpProblem
from .separation import minimize_rank_gap
from .solve import solve_with_cuts

CUT_TOL = 1e-7


@dataclass
class LpSolution:
    """Optimal fractional solution with its per-scenario decomposition.

    ``x`` is ``(n,)`` for the non-adaptive relaxation and ``(n, T)``
    otherwise, with column ``t - 1`` holding step ``t``; ``z`` is ``(n, m)``
    or ``(n, m, T)``; ``y`` is ``(m, T)`` for cover formulations.
    ``time_s`` and ``cost_s`` are the probing-time and cost contributions of
    each scenario, so ``objective == probs @ (time_s + cost_s)``.
    """

    kind: str
    instance: SearchInstance
    objective: float
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray | None
    time_s: np.ndarray
    cost_s: np.ndarray
    horizon: int
    backend: str
    iterations: int = 0
    rows: int = 0
    cut_rounds: int = 0
    k: int | None = None
    low_sets: list | None = None
    problem: LpProblem | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def opt_t(self) -> float:
        return float(self.instance.probs @ self.time_s)

    @property
    def opt_c(self) -> float:
        return float(self.instance.probs @ self.cost_s)

    def decomposition_gap(self) -> float:
        return abs(self.objective - float(self.instance.probs @ (self.time_s + self.cost_s)))

    def cumulative_x(self) -> np.ndarray:
        """``X[i, t-1] = sum_{t' <= t} x[i, t']``."""
        return np.cumsum(self.x, axis=1)

    def cumulative_z(self) -> np.ndarray:
        return np.cumsum(self.z, axis=2)

    def counting_gap(self) -> float:
        """``max_t (sum_i p_i X[i, t] - t)``; nonpositive for every feasible point."""
        if self.x.ndim != 2:
            return -math.inf
        load = self.instance.probe_times @ self.cumulative_x()
        return float((load - np.arange(1, self.horizon + 1)).max())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "objective": self.objective,
            "opt_t": self.opt_t,
            "opt_c": self.opt_c,
            "time_s": self.time_s.tolist(),
            "cost_s": self.cost_s.tolist(),
            "horizon": self.horizon,
            "backend": self.backend,
            "rows": self.rows,
            "cut_rounds": self.cut_rounds,
        }


def _finite_rows(instance: SearchInstance):
    """Scenarios kept in the LP; raise if a likely scenario has no finite box."""
    finite = np.isfinite(instance.costs)
    keep = []
    for s in range(instance.m):
        if finite[:, s].any():
            keep.append(s)
        elif instance.probs[s] > 0:
            raise InfeasibleInstanceError(f"scenario {s} has no finite-cost box")
    return keep


class _TimeLayout:
    """Columns ``x[i, t]`` with the matching and time-window rows."""

    def __init__(self, lp: LpProblem, instance: SearchInstance, window_eq: bool):
        self.instance = instance
        n = instance.n
        p = instance.probe_times
        T = instance.horizon
        self.T = T
        self.xcol = np.full((n, T), -1, dtype=np.int64)
        for i in range(n):
            for t in range(int(p[i]), T + 1):
                self.xcol[i, t - 1] = lp.add_var(("x", i, t))
        # boxes under probing at step t: those finishing in [t, t + p_i - 1]
        for t in range(1, T + 1):
            cols = []
            for i in range(n):
                hi = min(T, t + int(p[i]) - 1)
                cols.extend(c for c in self.xcol[i, t - 1:hi] if c >= 0)
            lp.add_row(cols, np.ones(len(cols)), EQ if window_eq else LE, 1.0, f"time:{t}")
        for i in range(n):
            cols = self.xcol[i][self.xcol[i] >= 0]
            lp.add_row(cols, np.ones(cols.size), LE, 1.0, f"once:{i}")

    def add_z(self, lp: LpProblem, boxes_per_scenario, cost_fn) -> np.ndarray:
        """Add ``z[i, s, t] <= x[i, t]`` for the given boxes of each scenario."""
        n, m, T = self.instance.n, self.instance.m, self.T
        zcol = np.full((n, m, T), -1, dtype=np.int64)
        for s, boxes in enumerate(boxes_per_scenario):
            for i in boxes:
                for t in range(1, T + 1):
                    xc = self.xcol[i, t - 1]
                    if xc < 0:
                        continue
                    j = lp.add_var(("z", i, s, t), cost_fn(i, s, t))
                    zcol[i, s, t - 1] = j
                    lp.add_row([j, xc], [1.0, -1.0], LE, 0.0)
        return zcol


def _gather(values: np.ndarray, cols: np.ndarray) -> np.ndarray:
    out = np.zeros(cols.shape)
    mask = cols >= 0
    out[mask] = values[cols[mask]]
    return out


def _spa_cost_fn(instance):
    c = instance.costs
    pi = instance.probs
    return lambda i, s, t: pi[s] * (t + c[i, s])


def _finite_boxes(instance, keep):
    fin = np.isfinite(instance.costs)
    return [np.flatnonzero(fin[:, s]).tolist() if s in keep else [] for s in range(instance.m)]


# -- non-adaptive ---------------------------------------------------------------


def build_lp_na_general(instance: SearchInstance) -> LpProblem:
    """Open ``x_i`` (paying ``p_i``), assign each scenario to one opened finite box."""
    keep = _finite_rows(instance)
    n, m = instance.n, instance.m
    lp = LpProblem("lp-na" if instance.unit_times else "lp-na-general")
    xcol = np.array([lp.add_var(("x", i), float(instance.probe_times[i])) for i in range(n)])
    zcol = np.full((n, m), -1, dtype=np.int64)
    for s in keep:
        for i in np.flatnonzero(np.isfinite(instance.costs[:, s])):
            j = lp.add_var(("z", int(i), s), instance.probs[s] * instance.costs[i, s])
            zcol[i, s] = j
            lp.add_row([j, xcol[i]], [1.0, -1.0], LE, 0.0)
        cols = zcol[:, s][zcol[:, s] >= 0]
        lp.add_row(cols, np.ones(cols.size), EQ, 1.0, f"assign:{s}")

    def decode(res):
        x = res.values[xcol]
        z = _gather(res.values, zcol)
        cost_s = np.array([np.dot(z[:, s], np.where(zcol[:, s] >= 0, instance.costs[:, s], 0.0)) for s in range(m)])
        time_s = np.full(m, float(instance.probe_times @ x))
        return LpSolution(lp.kind, instance, res.objective, x, z, None, time_s, cost_s, instance.horizon,
                          res.backend, res.iterations, lp.num_rows, 0, problem=lp, values=res.values)

    lp.decode = decode
    lp.separator = None
    return lp


def build_lp_na(instance: SearchInstance) -> LpProblem:
    if not instance.unit_times:
        raise ValidationError("instance has general probing times; use build_lp_na_general")
    return build_lp_na_general(instance)


# -- scenario-aware, single box --------------------------------------------------


def _decode_timed(lp, instance, layout, zcol, kind, cost_in_objective=True, ycol=None, k=None):
    m, T = instance.m, layout.T
    steps = np.arange(1, T + 1)

    def decode(res):
        x = _gather(res.values, layout.xcol)
        z = _gather(res.values, zcol)
        y = None if ycol is None else _gather(res.values, ycol)
        finite_c = np.where(np.isfinite(instance.costs), instance.costs, 0.0)
        cost_s = np.einsum("ist,is->s", z, finite_c) if cost_in_objective else np.zeros(m)
        if y is None:
            time_s = np.einsum("ist,t->s", z, steps)
        else:
            time_s = 1.0 + (1.0 - y).sum(axis=1)
        return LpSolution(kind, instance, res.objective, x, z, y, time_s, cost_s, T, res.backend,
                          res.iterations, lp.num_rows, res.info.get("cut_rounds", 0), k=k,
                          problem=lp, values=res.values)

    return decode


def build_lp_spa_general(instance: SearchInstance) -> LpProblem:
    """Time-indexed relaxation with ``<= 1`` load per step (any probing times)."""
    return _build_spa(instance, window_eq=False, kind="lp-spa-general")


def build_lp_spa(instance: SearchInstance) -> LpProblem:
    """Unit-time relaxation: exactly one box per step, each box at most once."""
    if not instance.unit_times:
        raise ValidationError("instance has general probing times; use build_lp_spa_general")
    return _build_spa(instance, window_eq=True, kind="lp-spa")


def _build_spa(instance, window_eq, kind):
    keep = _finite_rows(instance)
    lp = LpProblem(kind)
    layout = _TimeLayout(lp, instance, window_eq)
    zcol = layout.add_z(lp, _finite_boxes(instance, keep), _spa_cost_fn(instance))
    for s in keep:
        cols = zcol[:, s, :][zcol[:, s, :] >= 0]
        lp.add_row(cols, np.ones(cols.size), EQ, 1.0, f"assign:{s}")
    lp.decode = _decode_timed(lp, instance, layout, zcol, kind)
    lp.separator = None
    return lp


def build_lp_mssc(instance: SearchInstance, low_sets: Sequence[Sequence[int]]) -> LpProblem:
    """Cover every scenario by one box of its low set; objective is cover time only."""
    if len(low_sets) != instance.m:
        raise ValidationError("need one low set per scenario")
    sets = [sorted(set(int(i) for i in L)) for L in low_sets]
    for s, L in enumerate(sets):
        if not L:
            raise ValidationError(f"low set of scenario {s} is empty")
        if L[0] < 0 or L[-1] >= instance.n:
            raise ValidationError(f"low set of scenario {s} mentions an unknown box")
    lp = LpProblem("lp-mssc")
    layout = _TimeLayout(lp, instance, window_eq=instance.unit_times)
    pi = instance.probs
    zcol = layout.add_z(lp, sets, lambda i, s, t: pi[s] * t)
    for s in range(instance.m):
        cols = zcol[:, s, :][zcol[:, s, :] >= 0]
        lp.add_row(cols, np.ones(cols.size), GE, 1.0, f"cover:{s}")
    decode = _decode_timed(lp, instance, layout, zcol, "lp-mssc", cost_in_objective=False)

    def decode_sets(res):
        sol = decode(res)
        sol.low_sets = sets
        return sol

    lp.decode = decode_sets
    lp.separator = None
    return lp


# -- cover formulations (k boxes, matroid bases) ---------------------------------


def _build_cover(instance, target, kind, window_eq):
    keep = _finite_rows(instance)
    m = instance.m
    lp = LpProblem(kind)
    layout = _TimeLayout(lp, instance, window_eq)
    T = layout.T
    c = instance.costs
    pi = instance.probs
    zcol = layout.add_z(lp, _finite_boxes(instance, keep), lambda i, s, t: pi[s] * c[i, s])
    ycol = np.full((m, T), -1, dtype=np.int64)
    for s in range(m):
        for t in range(1, T + 1):
            ycol[s, t - 1] = lp.add_var(("y", s, t), -pi[s])
        if s in keep:
            lp.add_row([ycol[s, T - 1]], [1.0], EQ, 1.0, f"covered:{s}")
    # time term: 1 + sum_t (1 - y_st), so the constant is 1 + T per unit of probability
    lp.objective_constant = 1.0 + T
    # empty-set cover rows at every (s, t)
    for s in keep:
        for t in range(1, T + 1):
            _add_cover_row(lp, zcol, ycol, s, t, (), target)
    return lp, layout, zcol, ycol, keep


def _add_cover_row(lp, zcol, ycol, s, t, A, rhs_coef) -> bool:
    name = f"cover:{s}:{t}:{','.join(map(str, A))}"
    if name in lp.row_names:
        return False
    block = zcol[:, s, :t].copy()
    if len(A):
        block[list(A)] = -1
    cols = block[block >= 0].tolist()
    lp.add_row(cols + [int(ycol[s, t - 1])], [1.0] * len(cols) + [-float(rhs_coef)], GE, 0.0, name)
    return True


def build_lp_kcover(instance: SearchInstance, k: int) -> LpProblem:
    """Select ``k`` boxes; cover rows for every box set ``A`` are added lazily."""
    if not 1 <= k <= instance.n:
        raise ValidationError(f"k={k} outside [1, {instance.n}]")
    _check_k_feasible(instance, k)
    kind = "lp-kcover" if instance.unit_times else "lp-kcover-general"
    lp, layout, zcol, ycol, keep = _build_cover(instance, k, kind, window_eq=instance.unit_times)
    lp.meta["k"] = k

    def separate(values):
        return separation_kcover_all(lp, values, zcol, ycol, keep, k)

    lp.separator = separate
    lp.decode = _decode_timed(lp, instance, layout, zcol, kind, ycol=ycol, k=k)
    lp.meta["layout"] = (zcol, ycol, keep)
    return lp


def _check_k_feasible(instance, k):
    fin = np.isfinite(instance.costs).sum(axis=0)
    for s in range(instance.m):
        if instance.probs[s] > 0 and fin[s] < k:
            raise InfeasibleInstanceError(f"scenario {s} has fewer than {k} finite-cost boxes")


def kcover_violation(Zst: np.ndarray, y: float, k: int) -> tuple[float, tuple]:
    """Most violated cover row at one ``(s, t)``: removing the ``j`` largest prefix masses."""
    order = np.argsort(-Zst, kind="stable")
    total = Zst.sum()
    top = np.concatenate([[0.0], np.cumsum(Zst[order])])
    best, best_j = -math.inf, 0
    for j in range(0, min(k, Zst.size + 1)):
        v = (k - j) * y - (total - top[j])
        if v > best:
            best, best_j = v, j
    return best, tuple(sorted(int(i) for i in order[:best_j]))


def separation_kcover(solution: LpSolution, s: int, t: int) -> tuple | None:
    """Violated box set ``A`` for scenario ``s`` at step ``t``, or None."""
    Z = solution.cumulative_z()[:, s, t - 1]
    viol, A = kcover_violation(Z, float(solution.y[s, t - 1]), solution.k)
    return A if viol > CUT_TOL else None


def separation_kcover_all(lp, values, zcol, ycol, keep, k) -> int:
    Z = np.cumsum(_gather(values, zcol), axis=2)
    y = _gather(values, ycol)
    added = 0
    for s in keep:
        for t in range(1, ycol.shape[1] + 1):
            if y[s, t - 1] <= CUT_TOL:
                continue
            viol, A = kcover_violation(Z[:, s, t - 1], y[s, t - 1], k)
            if viol > CUT_TOL:
                added += _add_cover_row(lp, zcol, ycol, s, t, A, k - len(A))
    return added


def build_lp_matroid(instance: SearchInstance, matroid: Matroid) -> LpProblem:
    """Select a basis; rank and cover rows for every box set are added lazily."""
    if matroid.ground_size != instance.n:
        raise ValidationError("matroid ground set must match the boxes")
    check_satisfiable(instance, MatroidBasis(matroid))
    r = matroid.full_rank
    kind = "lp-matroid" if instance.unit_times else "lp-matroid-general"
    # loops can never be part of a basis: drop their z columns by marking them infinite
    loops = set(matroid.loops())
    masked = instance
    if loops:
        cm = instance.costs.copy()
        cm[list(loops), :] = math.inf
        masked = instance.with_costs(cm)
    lp, layout, zcol, ycol, keep = _build_cover(masked, r, kind, window_eq=instance.unit_times)
    lp.meta["rank"] = r
    for s in keep:
        cols = zcol[:, s, :][zcol[:, s, :] >= 0]
        lp.add_row(cols, np.ones(cols.size), LE, float(r), f"rank:{s}:all")

    def separate(values):
        return separation_matroid_all(lp, values, zcol, ycol, keep, matroid)

    lp.separator = separate
    decode = _decode_timed(lp, masked, layout, zcol, kind, ycol=ycol, k=r)

    def decode_orig(res):
        sol = decode(res)
        sol.instance = instance
        return sol

    lp.decode = decode_orig
    lp.meta["layout"] = (zcol, ycol, keep)
    lp.meta["matroid"] = matroid
    return lp


def matroid_violations(Z_t: np.ndarray, Z_all: np.ndarray, y: np.ndarray, matroid: Matroid):
    """Most violated rank row and cover rows for one scenario.

    Returns ``(rank_viol, A_rank, [(t, viol, A), ...])``.
    """
    r = matroid.full_rank
    g, A_rank = minimize_rank_gap(matroid, 1.0, Z_all)
    rank_viol = -g
    covers = []
    for t in range(1, Z_t.shape[1] + 1):
        yt = float(y[t - 1])
        if yt <= CUT_TOL:
            continue
        h, A = minimize_rank_gap(matroid, yt, Z_t[:, t - 1])
        viol = -(Z_t[:, t - 1].sum() - r * yt + h)
        covers.append((t, viol, A))
    return rank_viol, A_rank, covers


def separation_matroid(solution: LpSolution, s: int, t: int, matroid: Matroid) -> tuple | None:
    """Violated cover set ``A`` for scenario ``s`` at step ``t``, or None."""
    Z = solution.cumulative_z()[:, s, t - 1]
    yt = float(solution.y[s, t - 1])
    h, A = minimize_rank_gap(matroid, yt, Z)
    viol = -(Z.sum() - matroid.full_rank * yt + h)
    return A if viol > CUT_TOL else None


def separation_matroid_all(lp, values, zcol, ycol, keep, matroid) -> int:
    z = _gather(values, zcol)
    Z = np.cumsum(z, axis=2)
    y = _gather(values, ycol)
    r = matroid.full_rank
    added = 0
    for s in keep:
        rank_viol, A_rank, covers = matroid_violations(Z[:, s, :], Z[:, s, -1], y[s], matroid)
        if rank_viol > CUT_TOL:
            name = f"rank:{s}:{','.join(map(str, A_rank))}"
            if name not in lp.row_names:
                block = zcol[list(A_rank), s, :]
                cols = block[block >= 0]
                lp.add_row(cols, np.ones(cols.size), LE, float(matroid.rank(A_rank)), name)
                added += 1
        for t, viol, A in covers:
            if viol > CUT_TOL:
                added += _add_cover_row(lp, zcol, ycol, s, t, A, r - matroid.rank(A))
    return added


# -- entry points ----------------------------------------------------------------


def solve_lp(problem: LpProblem, backend: str = "highs") -> LpSolution:
    """Solve a built relaxation (running its separation loop) and decode it."""
    res = solve_with_cuts(problem, getattr(problem, "separator", None), backend)
    return problem.decode(res)


def solve_lp_na(instance: SearchInstance, backend: str = "highs") -> LpSolution:
    return solve_lp(build_lp_na_general(instance), backend)


def solve_lp_spa(instance: SearchInstance, backend: str = "highs") -> LpSolution:
    build = build_lp_spa if instance.unit_times else build_lp_spa_general
    return solve_lp(build(instance), backend)


def solve_lp_mssc(instance: SearchInstance, low_sets, backend: str = "highs") -> LpSolution:
    return solve_lp(build_lp_mssc(instance, low_sets), backend)


def solve_lp_kcover(instance: SearchInstance, k: int, backend: str = "highs") -> LpSolution:
    return solve_lp(build_lp_kcover(instance, k), backend)


def solve_lp_matroid(instance: SearchInstance, matroid: Matroid, backend: str = "highs") -> LpSolution:
    return solve_lp(build_lp_matroid(instance, matroid), backend)


def solve_spa_relaxation(instance: SearchInstance, constraint: FeasibilityConstraint | None = None,
                         backend: str = "highs") -> LpSolution:
    """Lower bound on the best scenario-aware strategy under ``constraint``."""
    constraint = constraint or SelectOne()
    if isinstance(constraint, MatroidBasis):
        return solve_lp_matroid(instance, constraint.matroid, backend)
    if isinstance(constraint, SelectK) and constraint.k > 1:
        return solve_lp_kcover(instance, constraint.k, backend)
    return solve_lp_spa(instance, backend)
