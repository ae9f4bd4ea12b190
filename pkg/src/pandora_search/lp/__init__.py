"""LP relaxations, solvers and separation oracles."""

from .formulations import (
    LpSolution,
    build_lp_kcover,
    build_lp_matroid,
    build_lp_mssc,
    build_lp_na,
    build_lp_na_general,
    build_lp_spa,
    build_lp_spa_general,
    kcover_violation,
    separation_kcover,
    separation_matroid,
    solve_lp,
    solve_lp_kcover,
    solve_lp_matroid,
    solve_lp_mssc,
    solve_lp_na,
    solve_lp_spa,
    solve_spa_relaxation,
)
from .problem import EQ, GE, LE, LpProblem, LpResult
from .separation import minimize_rank_gap
from .simplex import solve_dense, solve_simplex
from .solve import BACKENDS, solve_raw, solve_with_cuts

__all__ = [
    "BACKENDS", "EQ", "GE", "LE", "LpProblem", "LpResult", "LpSolution",
    "build_lp_kcover", "build_lp_matroid", "build_lp_mssc", "build_lp_na", "build_lp_na_general",
    "build_lp_spa", "build_lp_spa_general", "kcover_violation", "minimize_rank_gap",
    "separation_kcover", "separation_matroid", "solve_dense", "solve_lp", "solve_lp_kcover",
    "solve_lp_matroid", "solve_lp_mssc", "solve_lp_na", "solve_lp_spa", "solve_raw",
    "solve_simplex", "solve_spa_relaxation", "solve_with_cuts",
]
