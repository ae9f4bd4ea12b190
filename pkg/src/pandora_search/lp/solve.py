"""Backend dispatch and the cutting-plane outer loop."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import linprog

from ..errors import InfeasibleInstanceError, SolverStalledError
from .problem import LpProblem, LpResult
from .simplex import solve_simplex

BACKENDS = ("highs", "simplex")
MAX_CUT_ROUNDS = 500


def solve_highs(problem: LpProblem) -> LpResult:
    A_ub, b_ub, A_eq, b_eq = problem.matrices()
    res = linprog(
        problem.objective,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=np.column_stack([np.zeros(problem.num_cols), problem.upper]),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status == 2:
        raise InfeasibleInstanceError(f"LP infeasible: {res.message}")
    if res.status != 0:
        raise SolverStalledError(f"LP solver failed: {res.message}", {"status": int(res.status)})
    vals = np.clip(res.x, 0.0, problem.upper)
    obj = float(problem.objective @ vals) + problem.objective_constant
    return LpResult(vals, obj, "highs", int(res.nit))


def solve_raw(problem: LpProblem, backend: str = "highs") -> LpResult:
    if backend == "highs":
        return solve_highs(problem)
    if backend == "simplex":
        return solve_simplex(problem)
    raise ValueError(f"unknown LP backend {backend!r}; choose from {BACKENDS}")


Separator = Callable[[np.ndarray], int]


def solve_with_cuts(problem: LpProblem, separate: Separator | None, backend: str = "highs",
                    max_rounds: int = MAX_CUT_ROUNDS) -> LpResult:
    """Re-solve until ``separate(values)`` adds no more rows.

    ``separate`` appends violated rows to ``problem`` and returns how many
    it added.
    """
    rounds = 0
    iters = 0
    while True:
        res = solve_raw(problem, backend)
        iters += res.iterations
        if separate is None:
            break
        added = separate(res.values)
        if added == 0:
            break
        rounds += 1
        if rounds >= max_rounds:
            raise SolverStalledError(
                f"cutting-plane loop did not converge in {max_rounds} rounds",
                {"rows": problem.num_rows, "cols": problem.num_cols},
            )
    res.iterations = iters
    res.info["cut_rounds"] = rounds
    res.info["rows"] = problem.num_rows
    return res
