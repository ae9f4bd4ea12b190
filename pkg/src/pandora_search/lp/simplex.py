"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Meant for desk-scale problems and for cross-checking the default backend;
every pivot touches the whole tableau.
"""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleInstanceError, SolverStalledError
from .problem import EQ, GE, LE, LpProblem, LpResult

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
MAX_PIVOTS = 10**6


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], max_pivots: int):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.max_pivots = max_pivots

    @property
    def m(self):
        return self.T.shape[0] - 1

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = c
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise SolverStalledError(
                f"simplex exceeded {self.max_pivots} pivots",
                {"pivots": self.pivots, "rows": self.m, "cols": T.shape[1] - 1},
            )

    def run(self, allowed: np.ndarray) -> None:
        """Optimise the objective row over columns flagged in ``allowed``."""
        T = self.T
        m = self.m
        while True:
            red = T[m, :-1]
            cand = np.flatnonzero((red < -PIVOT_TOL) & allowed)
            if cand.size == 0:
                return
            c = int(cand[0])
            colv = T[:m, c]
            pos = np.flatnonzero(colv > PIVOT_TOL)
            if pos.size == 0:
                raise SolverStalledError("LP is unbounded", {"column": c})
            ratios = T[pos, -1] / colv[pos]
            best = ratios.min()
            tied = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            r = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(r, c)


def solve_dense(c, A, b, max_pivots: int = MAX_PIVOTS) -> tuple[np.ndarray, float, int]:
    """Minimise ``c @ x`` subject to ``A @ x = b`` and ``x >= 0``."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # reuse unit columns as the starting basis where possible
    basis = [-1] * m
    for j in range(n):
        col = A[:, j]
        nz = np.flatnonzero(col)
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1:
            basis[nz[0]] = j
    need = [i for i in range(m) if basis[i] == -1]
    na = len(need)
    T = np.zeros((m + 1, n + na + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(need):
        T[i, n + k] = 1.0
        basis[i] = n + k
    tab = _Tableau(T, basis, max_pivots)

    if na:
        T[m, :] = 0.0
        T[m, n:n + na] = 1.0
        for i in need:
            T[m] -= T[i]
        tab.run(np.ones(n + na, dtype=bool))
        if -T[m, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            raise InfeasibleInstanceError(f"LP infeasible (phase-1 residual {-T[m, -1]:.3g})")
        # pivot remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if tab.basis[r] >= n:
                cols = np.flatnonzero(np.abs(T[r, :n]) > PIVOT_TOL)
                if cols.size:
                    tab.pivot(r, int(cols[0]))
                    keep.append(r)
            else:
                keep.append(r)
        rows = keep + [m]
        T = np.hstack([T[rows, :n], T[rows, -1:]])
        tab = _Tableau(T, [tab.basis[r] for r in keep], max_pivots - tab.pivots)
        m = len(keep)

    cb = c[tab.basis]
    T[m, :n] = c - cb @ T[:m, :n]
    T[m, -1] = -cb @ T[:m, -1]
    tab.run(np.ones(n, dtype=bool))
    x = np.zeros(n)
    x[tab.basis] = T[:m, -1]
    x[np.abs(x) < 1e-12] = 0.0
    return x, float(c @ x), tab.pivots


def solve_simplex(problem: LpProblem, max_pivots: int = MAX_PIVOTS) -> LpResult:
    """Convert to equality form (slacks for inequalities and upper bounds) and solve."""
    nv = problem.num_cols
    ub = problem.upper
    bounded = np.flatnonzero(np.isfinite(ub))
    n_ineq = sum(1 for r in problem.rows if r.sense != EQ)
    m = problem.num_rows + bounded.size
    n = nv + n_ineq + bounded.size
    A = np.zeros((m, n))
    b = np.zeros(m)
    s = nv
    for k, row in enumerate(problem.rows):
        np.add.at(A[k], row.cols, row.coefs)
        b[k] = row.rhs
        if row.sense == LE:
            A[k, s] = 1.0
            s += 1
        elif row.sense == GE:
            A[k, s] = -1.0
            s += 1
    for k, j in enumerate(bounded, start=problem.num_rows):
        A[k, j] = 1.0
        A[k, s] = 1.0
        b[k] = ub[j]
        s += 1
    c = np.zeros(n)
    c[:nv] = problem.objective
    x, _, pivots = solve_dense(c, A, b, max_pivots=max_pivots)
    vals = np.clip(x[:nv], 0.0, ub)
    obj = float(problem.objective @ vals) + problem.objective_constant
    return LpResult(vals, obj, "simplex", pivots)


__all__ = ["solve_dense", "solve_simplex", "LE", "GE", "EQ"]
