"""Command line entry point: ``pandora-search <command> ...``.

Exit codes: 0 success, 1 usage error, 2 invalid input or infeasible
instance, 3 size budget exceeded, 4 solver or rounding failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import BudgetError, InfeasibleInstanceError, PandoraError, ValidationError
from ..lp.formulations import (
    build_lp_kcover,
    build_lp_matroid,
    build_lp_mssc,
    build_lp_na_general,
    build_lp_spa,
    build_lp_spa_general,
    solve_lp,
    solve_lp_spa,
)
from ..lp.solve import BACKENDS
from ..model.constraints import MatroidBasis, SelectK, SelectOne, parse_constraint
from ..model.evaluate import evaluate_na, evaluate_spa
from ..model.instance import SearchInstance
from ..model.strategy import FixedSet, ScenarioAware, Strategy, evaluate_pa
from ..oracle import DEFAULT_BUDGET, opt_fa, opt_na, opt_pa, opt_spa
from ..rounding import build_low_sets, round_kcover, round_matroid, round_na, round_spa_mssc
from ..ski import spa_to_pa
from .generators import FAMILIES, GeneratorSpec, generate
from .pipeline import METHODS, bench, pipeline_pa, report_csv
from .strategy_io import dump_strategy, load_strategy

EXIT_USAGE, EXIT_INVALID, EXIT_BUDGET, EXIT_FAILURE = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load(args) -> tuple[SearchInstance, object]:
    inst = SearchInstance.load(args.instance)
    constraint = parse_constraint(args.constraint, inst.n) if getattr(args, "constraint", None) else SelectOne()
    return inst, constraint


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _cmd_gen(args) -> int:
    params = json.loads(args.params) if args.params else {}
    if args.family == "partition-matroid-lb":
        params.setdefault("k", args.k)
    if args.family == "general-times":
        params.setdefault("P", args.P)
    inst, matroid = generate(GeneratorSpec(args.family, args.n, args.m, args.seed, params))
    _emit(inst.to_json() + "\n", args.out)
    if matroid is not None:
        target = args.matroid_out or (str(Path(args.out).with_suffix("")) + ".matroid.json" if args.out else None)
        if target:
            matroid.save(target)
        else:
            sys.stdout.write(json.dumps(matroid.to_dict()) + "\n")
    return 0


def _build(kind, inst, constraint, backend):
    if kind == "auto":
        if isinstance(constraint, MatroidBasis):
            kind = "matroid"
        elif isinstance(constraint, SelectK) and constraint.k > 1:
            kind = "kcover"
        else:
            kind = "spa"
    if kind == "na":
        return build_lp_na_general(inst)
    if kind == "spa":
        return build_lp_spa(inst) if inst.unit_times else build_lp_spa_general(inst)
    if kind == "mssc":
        low = build_low_sets(solve_lp_spa(inst, backend), inst)
        return build_lp_mssc(inst, low)
    if kind == "kcover":
        if not isinstance(constraint, SelectK):
            raise ValidationError("kcover relaxation needs a k:<K> constraint")
        return build_lp_kcover(inst, constraint.k)
    if isinstance(constraint, MatroidBasis):
        return build_lp_matroid(inst, constraint.matroid)
    raise ValidationError("matroid relaxation needs a matroid:<path> constraint")


def _cmd_solve_lp(args) -> int:
    inst, constraint = _load(args)
    problem = _build(args.kind, inst, constraint, args.backend)
    sol = solve_lp(problem, args.backend)
    if args.dump_lp:
        Path(args.dump_lp).write_text(sol.problem.to_lp_format() if sol.problem is not None else problem.to_lp_format())
    doc = sol.to_json()
    doc["counting_gap"] = sol.counting_gap() if sol.x.ndim == 2 else None
    if args.format == "csv":
        lines = ["scenario,time,cost"] + [f"{s},{t!r},{c!r}" for s, (t, c) in enumerate(zip(sol.time_s, sol.cost_s))]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_dump(doc), args.out)
    return 0


def _round(inst, constraint, method, backend):
    if method == "spa-na":
        from ..lp.formulations import solve_lp_na

        return round_na(solve_lp_na(inst, backend), inst)
    if method == "spa-pa":
        return round_spa_mssc(solve_lp_spa(inst, backend), inst)
    if method == "kcover":
        if not isinstance(constraint, SelectK):
            raise ValidationError("kcover needs a k:<K> constraint")
        return round_kcover(solve_lp(build_lp_kcover(inst, constraint.k), backend), inst, constraint.k)
    if not isinstance(constraint, MatroidBasis):
        raise ValidationError("matroid needs a matroid:<path> constraint")
    sol = solve_lp(build_lp_matroid(inst, constraint.matroid), backend)
    return round_matroid(sol, inst, constraint.matroid)


def _cmd_round(args) -> int:
    inst, constraint = _load(args)
    strategy = _round(inst, constraint, args.method, args.backend)
    if args.online:
        strategy = Strategy(strategy.order, spa_to_pa(constraint=constraint))
    strategy.seed = args.seed
    _emit(dump_strategy(strategy), args.out)
    return 0


def _cmd_evaluate(args) -> int:
    inst, constraint = _load(args)
    exact = None
    if args.strategy:
        strategy = load_strategy(args.strategy, inst.n)
    else:
        if not args.order:
            raise ValidationError("give --strategy or --order")
        order = [int(v) for v in args.order.split(",")]
        if args.stopping == "na":
            strategy = Strategy(order, FixedSet(order))
            exact = evaluate_na(inst, order, constraint)
        elif args.stopping == "spa":
            strategy = Strategy(order, ScenarioAware(order))
            exact = evaluate_spa(inst, order, constraint)
        else:
            strategy = Strategy(order, spa_to_pa(order, constraint))
    seed = args.seed if args.seed is not None else (strategy.seed or 0)
    est = evaluate_pa(inst, strategy, constraint, args.trials, seed)
    doc = {"estimate": est.to_json(), "exact": exact, "seed": seed}
    _emit(_dump(doc), args.out)
    return 0


def _cmd_oracle(args) -> int:
    inst, constraint = _load(args)
    fns = {"na": opt_na, "spa": opt_spa, "pa": opt_pa, "fa": opt_fa}
    which = list(fns) if args.benchmark == "all" else [args.benchmark]
    out = {}
    for name in which:
        res = fns[name](inst, constraint, DEFAULT_BUDGET)
        out[f"opt_{name}"] = float(res[0] if isinstance(res, tuple) else res)
        if args.witness and isinstance(res, tuple):
            w = res[1]
            out[f"{name}_witness"] = w.to_json() if hasattr(w, "to_json") else list(w)
    _emit(json.dumps(out) + "\n", args.out)
    return 0


def _cmd_pipeline(args) -> int:
    inst, constraint = _load(args)
    rep = pipeline_pa(inst, constraint, args.method, args.seed, args.trials, backend=args.backend,
                      oracles=not args.no_oracles, timing=args.timing)
    _emit(rep.dumps(args.format), args.out)
    return 0


def _cmd_bench(args) -> int:
    seeds = np.random.SeedSequence(args.seed).generate_state(args.count)
    params = json.loads(args.params) if args.params else {}
    pairs = [generate(GeneratorSpec(args.family, args.n, args.m, int(s), dict(params))) for s in seeds]
    instances = [p[0] for p in pairs]

    def constraint_for(inst):
        i = instances.index(inst)
        if pairs[i][1] is not None:
            return MatroidBasis(pairs[i][1])
        return parse_constraint(args.constraint, inst.n)

    reps = bench(instances, constraint_for, args.method, args.seed, args.trials, backend=args.backend,
                 oracles=not args.no_oracles, timing=args.timing)
    if args.format == "csv":
        _emit(report_csv(reps), args.out)
    else:
        worst = {}
        for rep in reps:
            for r in rep.ratios:
                key = f"{r.numerator}/{r.denominator}"
                worst[key] = max(worst.get(key, 0.0), r.value)
        _emit(_dump({"reports": [r.to_json() for r in reps], "max_ratios": worst}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pandora-search", description="Probing strategies for search with correlated costs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, instance=True, method=False):
        if instance:
            sp.add_argument("--instance", required=True)
        sp.add_argument("--constraint", default="one", help="one | k:<K> | matroid:<path>")
        if method:
            sp.add_argument("--method", choices=METHODS, default="spa-pa")
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--backend", choices=BACKENDS, default="highs")
        sp.add_argument("--out")

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--m", type=int, default=4)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--P", type=int, default=3)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--params", help="extra generator parameters as JSON")
    g.add_argument("--out")
    g.add_argument("--matroid-out")
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("solve-lp", help="solve a relaxation")
    common(s)
    s.add_argument("--kind", choices=("auto", "na", "spa", "mssc", "kcover", "matroid"), default="auto")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--dump-lp", help="write the final LP in CPLEX LP format")
    s.set_defaults(func=_cmd_solve_lp)

    r = sub.add_parser("round", help="round a relaxation into a strategy document")
    common(r, method=True)
    r.add_argument("--online", action="store_true", help="replace the stopping rule by ski rental")
    r.set_defaults(func=_cmd_round)

    e = sub.add_parser("evaluate", help="evaluate a strategy")
    common(e)
    e.add_argument("--strategy")
    e.add_argument("--order", help="comma separated box indices")
    e.add_argument("--stopping", choices=("na", "spa", "pa"), default="pa")
    e.add_argument("--trials", type=int, default=1000)
    e.set_defaults(func=_cmd_evaluate, seed=None)

    o = sub.add_parser("oracle", help="exact benchmark values on small instances")
    common(o)
    o.add_argument("--benchmark", choices=("na", "spa", "pa", "fa", "all"), default="all")
    o.add_argument("--witness", action="store_true")
    o.set_defaults(func=_cmd_oracle)

    pl = sub.add_parser("pipeline", help="relaxation, rounding, online stop and evaluation")
    common(pl, method=True)
    pl.add_argument("--trials", type=int, default=1000)
    pl.add_argument("--format", choices=("json", "csv"), default="json")
    pl.add_argument("--no-oracles", action="store_true")
    pl.add_argument("--timing", action="store_true", help="include wall-clock seconds in the report")
    pl.set_defaults(func=_cmd_pipeline)

    b = sub.add_parser("bench", help="pipeline over a batch of generated instances")
    common(b, instance=False, method=True)
    b.add_argument("--family", choices=FAMILIES, default="random-uniform")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--n", type=int, default=4)
    b.add_argument("--m", type=int, default=4)
    b.add_argument("--params")
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.add_argument("--no-oracles", action="store_true")
    b.add_argument("--timing", action="store_true")
    b.set_defaults(func=_cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, InfeasibleInstanceError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PandoraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
