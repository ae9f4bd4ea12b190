"""A small LP container with named columns and row-wise constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy import sparse

LE, GE, EQ = "<=", ">=", "="


@dataclass
class Row:
    cols: np.ndarray
    coefs: np.ndarray
    sense: str
    rhs: float
    name: str = ""


class LpProblem:
    """Minimisation LP over columns bounded in ``[0, ub]``.

    Columns are addressed by hashable keys such as ``("x", i, t)``;
    ``index[key]`` gives the column number.
    """

    def __init__(self, kind: str = "lp"):
        self.kind = kind
        self.keys: list[Hashable] = []
        self.index: dict[Hashable, int] = {}
        self._obj: list[float] = []
        self._ub: list[float] = []
        self.rows: list[Row] = []
        self.row_names: set[str] = set()
        self.meta: dict = {}
        self.objective_constant = 0.0
        self.separator = None
        self.decode = None

    @property
    def num_cols(self) -> int:
        return len(self.keys)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_var(self, key: Hashable, cost: float = 0.0, ub: float = 1.0) -> int:
        if key in self.index:
            raise KeyError(f"duplicate column {key!r}")
        j = len(self.keys)
        self.keys.append(key)
        self.index[key] = j
        self._obj.append(float(cost))
        self._ub.append(float(ub))
        return j

    def col(self, key) -> int | None:
        return self.index.get(key)

    def add_row(self, cols: Sequence[int], coefs: Sequence[float], sense: str, rhs: float, name: str = "") -> None:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"bad constraint sense {sense!r}")
        cols = np.asarray(cols, dtype=np.int64)
        coefs = np.asarray(coefs, dtype=float)
        self.rows.append(Row(cols, coefs, sense, float(rhs), name))
        if name:
            self.row_names.add(name)

    @property
    def objective(self) -> np.ndarray:
        return np.array(self._obj)

    @property
    def upper(self) -> np.ndarray:
        return np.array(self._ub)

    def matrices(self):
        """``(A_ub, b_ub, A_eq, b_eq)`` as CSR matrices; ``>=`` rows are negated."""
        ub_r, ub_c, ub_v, b_ub = [], [], [], []
        eq_r, eq_c, eq_v, b_eq = [], [], [], []
        for row in self.rows:
            if row.sense == EQ:
                k = len(b_eq)
                eq_r.extend([k] * row.cols.size)
                eq_c.extend(row.cols.tolist())
                eq_v.extend(row.coefs.tolist())
                b_eq.append(row.rhs)
            else:
                sign = 1.0 if row.sense == LE else -1.0
                k = len(b_ub)
                ub_r.extend([k] * row.cols.size)
                ub_c.extend(row.cols.tolist())
                ub_v.extend((sign * row.coefs).tolist())
                b_ub.append(sign * row.rhs)
        n = self.num_cols
        A_ub = sparse.csr_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n))
        A_eq = sparse.csr_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n))
        return A_ub, np.array(b_ub), A_eq, np.array(b_eq)

    def max_violation(self, values: np.ndarray) -> float:
        """Largest violation of any row or bound by ``values``."""
        v = np.asarray(values, dtype=float)
        worst = max(0.0, float(-v.min(initial=0.0)), float((v - self.upper).max(initial=0.0)))
        for row in self.rows:
            lhs = float(np.dot(row.coefs, v[row.cols]))
            if row.sense == LE:
                gap = lhs - row.rhs
            elif row.sense == GE:
                gap = row.rhs - lhs
            else:
                gap = abs(lhs - row.rhs)
            worst = max(worst, gap)
        return worst

    def to_lp_format(self) -> str:
        """CPLEX LP text; column names are ``c<index>`` with a key comment block."""
        out = ["\\ " + self.kind, "\\ columns:"]
        for j, key in enumerate(self.keys):
            out.append(f"\\   c{j} = {key!r}")
        out.append("Minimize")
        terms = [f"{_num(v)} c{j}" for j, v in enumerate(self._obj) if v != 0.0]
        if self.objective_constant:
            terms.append(f"{_num(self.objective_constant)} constant")
        out.append(" obj: " + (" + ".join(terms) if terms else "0 c0"))
        out.append("Subject To")
        for k, row in enumerate(self.rows):
            lhs = " + ".join(f"{_num(a)} c{j}" for j, a in zip(row.cols.tolist(), row.coefs.tolist())) or "0 c0"
            out.append(f" r{k}: {lhs} {row.sense} {_num(row.rhs)}")
        out.append("Bounds")
        for j, ub in enumerate(self._ub):
            out.append(f" 0 <= c{j} <= {_num(ub)}")
        if self.objective_constant:
            out.append(" constant = 1")
        out.append("End")
        return "\n".join(out) + "\n"


def _num(v: float) -> str:
    return repr(float(v))


@dataclass
class LpResult:
    values: np.ndarray
    objective: float
    backend: str
    iterations: int = 0
    info: dict = field(default_factory=dict)
