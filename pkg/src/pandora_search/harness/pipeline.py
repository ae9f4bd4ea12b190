"""End-to-end pipelines: LP relaxation, rounding, online stopping, evaluation."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetError, ValidationError
from ..lp.formulations import (
    LpSolution,
    solve_lp_kcover,
    solve_lp_matroid,
    solve_lp_na,
    solve_lp_spa,
)
from ..model.constraints import FeasibilityConstraint, MatroidBasis, SelectK, SelectOne, check_satisfiable
from ..model.evaluate import expectation
from ..model.instance import SearchInstance
from ..model.strategy import PAEstimate, Strategy, evaluate_pa
from ..oracle import DEFAULT_BUDGET, OracleBudget, opt_fa, opt_na, opt_pa, opt_spa
from ..rounding import (
    fast_round_kcover,
    fast_round_matroid,
    fast_round_na,
    low_set_costs,
    round_kcover,
    round_matroid,
    round_spa_mssc,
)
from ..rounding.params import ALPHA_SINGLE, E_RATIO, KCOVER_CEILING, SPA_PA_RATIO
from ..ski import expected_pa_cost, spa_to_pa

METHODS = ("spa-na", "spa-pa", "kcover", "matroid")
CSV_COLUMNS = ("record", "name", "value", "stderr", "mean_time", "mean_cost", "exact", "forced", "numerator",
               "denominator", "ceiling")


@dataclass
class MethodResult:
    name: str
    mean: float
    stderr: float
    mean_time: float
    mean_cost: float
    exact: bool
    trials: int = 0
    forced: int = 0

    @classmethod
    def from_estimate(cls, name: str, est: PAEstimate) -> "MethodResult":
        return cls(name, est.mean, est.stderr, est.mean_time, est.mean_cost, False, est.trials, est.forced)

    def upper(self, sigmas: float = 3.0) -> float:
        return self.mean + sigmas * self.stderr

    def to_json(self) -> dict:
        return {"name": self.name, "mean": _num(self.mean), "stderr": _num(self.stderr),
                "mean_time": _num(self.mean_time), "mean_cost": _num(self.mean_cost), "exact": self.exact,
                "trials": self.trials, "forced": self.forced}


@dataclass
class Ratio:
    numerator: str
    denominator: str
    value: float
    ceiling: float | None = None

    def to_json(self) -> dict:
        return {"numerator": self.numerator, "denominator": self.denominator, "value": _num(self.value),
                "ceiling": _num(self.ceiling) if self.ceiling is not None else None}


@dataclass
class EvaluationReport:
    method: str
    constraint: str
    seed: int
    trials: int
    instance: dict
    lp: dict
    methods: list[MethodResult] = field(default_factory=list)
    oracles: dict = field(default_factory=dict)
    ratios: list[Ratio] = field(default_factory=list)
    wall_clock: float | None = None

    def result(self, name: str) -> MethodResult:
        for r in self.methods:
            if r.name == name:
                return r
        raise KeyError(name)

    def ratio(self, numerator: str, denominator: str) -> float:
        for r in self.ratios:
            if r.numerator == numerator and r.denominator == denominator:
                return r.value
        raise KeyError((numerator, denominator))

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "constraint": self.constraint,
            "seed": self.seed,
            "trials": self.trials,
            "instance": self.instance,
            "lp": self.lp,
            "methods": [r.to_json() for r in self.methods],
            "oracles": {k: _num(v) for k, v in sorted(self.oracles.items())},
            "ratios": [r.to_json() for r in self.ratios],
        }
        if self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out

    def dumps(self, fmt: str = "json") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"
        if fmt == "csv":
            return report_csv([self])
        raise ValidationError(f"unknown report format {fmt!r}")


def report_csv(reports: list[EvaluationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow(["lp", rep.lp.get("kind", ""), _cell(rep.lp.get("objective")), "", _cell(rep.lp.get("opt_t")),
                    _cell(rep.lp.get("opt_c")), "true", "", "", "", ""])
        for r in rep.methods:
            w.writerow(["method", r.name, _cell(r.mean), _cell(r.stderr), _cell(r.mean_time), _cell(r.mean_cost),
                        str(r.exact).lower(), r.forced, "", "", ""])
        for k, v in sorted(rep.oracles.items()):
            w.writerow(["oracle", k, _cell(v), "", "", "", "true", "", "", "", ""])
        for r in rep.ratios:
            w.writerow(["ratio", f"{r.numerator}/{r.denominator}", _cell(r.value), "", "", "", "", "",
                        r.numerator, r.denominator, _cell(r.ceiling)])
    return buf.getvalue()


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    v = _num(v)
    return v if isinstance(v, str) else repr(v)


def _exact(name: str, value: float, time_part: float, cost_part: float) -> MethodResult:
    return MethodResult(name, value, 0.0, time_part, cost_part, True)


def _ratio(num: MethodResult, den_name: str, den: float, ceiling=None) -> Ratio:
    value = num.mean / den if den > 0 else (1.0 if num.mean == 0 else math.inf)
    return Ratio(num.name, den_name, value, ceiling)


def _default_constraint(method: str, constraint):
    if constraint is not None:
        return constraint
    if method in ("spa-na", "spa-pa"):
        return SelectOne()
    raise ValidationError(f"method {method!r} needs an explicit constraint")


def oracle_values(instance, constraint, budget: OracleBudget = DEFAULT_BUDGET,
                  which=("na", "spa", "pa", "fa")) -> dict:
    """Every oracle value whose size cap admits the instance."""
    fns = {"na": opt_na, "spa": opt_spa, "pa": opt_pa, "fa": opt_fa}
    out = {}
    for name in which:
        try:
            res = fns[name](instance, constraint, budget)
        except BudgetError:
            continue
        out[f"opt_{name}"] = float(res[0] if isinstance(res, tuple) else res)
    return out


def _lp_summary(sol: LpSolution) -> dict:
    return {"kind": sol.kind, "objective": _num(sol.objective), "opt_t": _num(sol.opt_t),
            "opt_c": _num(sol.opt_c), "backend": sol.backend, "rows": sol.rows, "cut_rounds": sol.cut_rounds}


def _instance_summary(instance: SearchInstance) -> dict:
    return {"n": instance.n, "m": instance.m, "unit_times": bool(instance.unit_times),
            "max_probe_time": int(instance.probe_times.max())}


def pipeline_pa(instance: SearchInstance, constraint: FeasibilityConstraint | None = None, method: str = "spa-pa",
                seed: int = 0, trials: int = 1000, *, backend: str = "highs", oracles: bool = True,
                budget: OracleBudget = DEFAULT_BUDGET, timing: bool = False) -> EvaluationReport:
    """Solve the relaxation, round it, wrap the order with ski rental, evaluate.

    ``spa-pa`` has a deterministic order, so its costs are exact; the
    other methods are Monte-Carlo estimates with standard errors.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    constraint = _default_constraint(method, constraint)
    check_satisfiable(instance, constraint)
    started = time.perf_counter()
    if method == "spa-na":
        rep = _pipeline_spa_na(instance, constraint, seed, trials, backend)
    elif method == "spa-pa":
        rep = _pipeline_spa_pa(instance, constraint, seed, trials, backend)
    elif method == "kcover":
        rep = _pipeline_kcover(instance, constraint, seed, trials, backend)
    else:
        rep = _pipeline_matroid(instance, constraint, seed, trials, backend)
    if oracles:
        rep.oracles = oracle_values(instance, constraint, budget)
        final = rep.methods[-1]
        for key in ("opt_na", "opt_spa", "opt_pa", "opt_fa"):
            if key in rep.oracles:
                rep.ratios.append(_ratio(final, key, rep.oracles[key], _oracle_ceiling(method, key)))
    if timing:
        rep.wall_clock = time.perf_counter() - started
    return rep


def _oracle_ceiling(method, key):
    if method == "spa-na" and key == "opt_na":
        return E_RATIO
    if method == "spa-pa" and key == "opt_pa":
        return SPA_PA_RATIO
    return None


def _base(method, constraint, seed, trials, instance, sol):
    return EvaluationReport(method, constraint.to_text(), seed, trials, _instance_summary(instance), _lp_summary(sol))


def _pipeline_spa_na(instance, constraint, seed, trials, backend):
    if not (isinstance(constraint, SelectK) and constraint.k == 1):
        raise ValidationError("spa-na supports the select-one constraint only")
    sol = solve_lp_na(instance, backend)
    rep = _base("spa-na", constraint, seed, trials, instance, sol)
    spa = MethodResult.from_estimate("rounded-spa", fast_round_na(sol, instance, trials, seed))
    pa = MethodResult.from_estimate("rounded-pa", fast_round_na(sol, instance, trials, seed, ski=True))
    rep.methods += [spa, pa]
    ceiling = 1.0 if instance.unit_times else 2.0
    rep.ratios.append(_ratio(spa, "lp", sol.objective, ceiling))
    rep.ratios.append(_ratio(pa, "lp", sol.objective, ceiling * E_RATIO))
    return rep


def _pipeline_spa_pa(instance, constraint, seed, trials, backend):
    if not (isinstance(constraint, SelectK) and constraint.k == 1):
        raise ValidationError("spa-pa supports the select-one constraint only")
    sol = solve_lp_spa(instance, backend)
    rep = _base("spa-pa", constraint, seed, trials, instance, sol)
    strat = round_spa_mssc(sol, instance)
    order = list(strat.order.boxes)
    times, costs = low_set_costs(instance, order, strat.stopping.low_sets, constraint)
    spa = _exact("rounded-spa", expectation(instance, times + costs), expectation(instance, times),
                 expectation(instance, costs))
    pa_value = expected_pa_cost(instance, order, constraint)
    pa = _exact("rounded-pa", pa_value, None, None)
    rep.methods += [spa, pa]
    rep.lp["order"] = order
    rep.ratios.append(_ratio(spa, "lp", sol.objective, ALPHA_SINGLE))
    rep.ratios.append(_ratio(pa, "lp", sol.objective, SPA_PA_RATIO))
    return rep


def _ski_wrapped(instance, constraint, strategy: Strategy, trials, seed, name) -> MethodResult:
    wrapped = Strategy(strategy.order, spa_to_pa(constraint=constraint))
    return MethodResult.from_estimate(name, evaluate_pa(instance, wrapped, constraint, trials, seed))


def _pipeline_kcover(instance, constraint, seed, trials, backend):
    if not isinstance(constraint, SelectK):
        raise ValidationError("kcover needs a k:<K> or one constraint")
    k = constraint.k
    sol = solve_lp_kcover(instance, k, backend)
    rep = _base("kcover", constraint, seed, trials, instance, sol)
    spa = MethodResult.from_estimate("rounded-spa", fast_round_kcover(sol, instance, k, trials, seed))
    pa = _ski_wrapped(instance, constraint, round_kcover(sol, instance, k), trials, seed, "rounded-pa")
    rep.methods += [spa, pa]
    rep.ratios.append(_ratio(spa, "lp", sol.objective, KCOVER_CEILING))
    rep.ratios.append(_ratio(pa, "lp", sol.objective, KCOVER_CEILING * E_RATIO))
    return rep


def _pipeline_matroid(instance, constraint, seed, trials, backend):
    if not isinstance(constraint, MatroidBasis):
        raise ValidationError("matroid needs a matroid:<path> constraint")
    M = constraint.matroid
    sol = solve_lp_matroid(instance, M, backend)
    rep = _base("matroid", constraint, seed, trials, instance, sol)
    spa = MethodResult.from_estimate("rounded-spa", fast_round_matroid(sol, M, instance, trials, seed))
    pa = _ski_wrapped(instance, constraint, round_matroid(sol, instance, M), trials, seed, "rounded-pa")
    rep.methods += [spa, pa]
    k = M.full_rank
    rep.ratios.append(_ratio(spa, "lp", sol.objective))
    if k >= 2:
        rep.ratios.append(Ratio("rounded-spa", "lp*ln(rank)", spa.mean / (sol.objective * math.log(k))
                                if sol.objective > 0 else math.inf))
    rep.ratios.append(_ratio(pa, "lp", sol.objective))
    return rep


def bench(instances, constraint_for, method: str, seed: int = 0, trials: int = 1000, **kw) -> list[EvaluationReport]:
    """Run :func:`pipeline_pa` over many instances with derived seeds."""
    seeds = np.random.SeedSequence(seed).generate_state(len(instances))
    return [pipeline_pa(inst, constraint_for(inst), method, int(s), trials, **kw) for inst, s in zip(instances, seeds)]
