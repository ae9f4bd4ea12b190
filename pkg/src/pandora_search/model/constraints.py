"""Feasibility constraints: select one box, select k boxes, or a matroid basis.

Each constraint knows how to price the cheapest feasible selection inside a
set of probed boxes. Infeasibility is reported as ``math.inf``, never as a
large sentinel.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from ..errors import InfeasibleInstanceError, ValidationError
from .matroid import Matroid, load_matroid


class FeasibilityConstraint:
    variant = "abstract"

    @property
    def target_rank(self) -> int:
        """Number of boxes in every feasible selection."""
        raise NotImplementedError

    def validate(self, n: int) -> None:
        pass

    def selection(self, costs, within: Iterable[int]) -> list[int] | None:
        """Cheapest feasible subset of ``within``, or None if there is none."""
        raise NotImplementedError

    def best_cost(self, costs, within: Iterable[int]) -> float:
        sel = self.selection(costs, within)
        if sel is None:
            return math.inf
        return float(np.asarray(costs, dtype=float)[sel].sum())

    def prefix_best(self, order, costs) -> np.ndarray:
        """Cheapest feasible cost within each prefix ``order[:t+1]``."""
        out = np.empty(len(order))
        for t in range(len(order)):
            out[t] = self.best_cost(costs, order[: t + 1])
        return out

    def best_cost_masks(self, masks: np.ndarray, costs: np.ndarray) -> np.ndarray:
        """Row-wise cheapest feasible cost; ``masks`` and ``costs`` are (N, n)."""
        return np.array([self.best_cost(c, np.flatnonzero(mk)) for mk, c in zip(masks, costs)])

    def to_text(self) -> str:
        raise NotImplementedError


class SelectK(FeasibilityConstraint):
    """Choose exactly ``k`` distinct probed boxes; cost is their sum."""

    variant = "select-k"

    def __init__(self, k: int):
        if int(k) != k or k < 1:
            raise ValidationError("k must be a positive integer")
        self.k = int(k)

    @property
    def target_rank(self):
        return self.k

    def validate(self, n):
        if self.k > n:
            raise ValidationError(f"cannot select {self.k} of {n} boxes")

    def selection(self, costs, within):
        c = np.asarray(costs, dtype=float)
        pool = sorted(set(int(i) for i in within), key=lambda i: (c[i], i))
        if len(pool) < self.k or math.isinf(c[pool[self.k - 1]]):
            return None
        return sorted(pool[: self.k])

    def best_cost(self, costs, within):
        c = np.asarray(costs, dtype=float)
        vals = np.sort(c[sorted(set(int(i) for i in within))])
        if vals.size < self.k:
            return math.inf
        return float(vals[: self.k].sum())

    def prefix_best(self, order, costs):
        c = np.asarray(costs, dtype=float)
        if self.k == 1:
            return np.minimum.accumulate(c[list(order)])
        out = np.empty(len(order))
        seen: list[float] = []
        for t, i in enumerate(order):
            seen.append(c[i])
            out[t] = math.inf if len(seen) < self.k else float(np.sum(np.sort(seen)[: self.k]))
        return out

    def best_cost_masks(self, masks, costs):
        masked = np.where(masks, costs, np.inf)
        if self.k == 1:
            return masked.min(axis=1)
        part = np.sort(masked, axis=1)[:, : self.k]
        return part.sum(axis=1)

    def to_text(self):
        return "one" if self.k == 1 else f"k:{self.k}"

    def __repr__(self):
        return f"SelectK({self.k})"

    def __eq__(self, other):
        return isinstance(other, SelectK) and other.k == self.k

    def __hash__(self):
        return hash(("k", self.k))


class SelectOne(SelectK):
    variant = "select-one"

    def __init__(self):
        super().__init__(1)

    def __repr__(self):
        return "SelectOne()"


class MatroidBasis(FeasibilityConstraint):
    """Choose a basis of ``matroid``; cost is the basis weight."""

    variant = "matroid-basis"

    def __init__(self, matroid: Matroid, source: str | None = None):
        self.matroid = matroid
        self.source = source

    @property
    def target_rank(self):
        return self.matroid.full_rank

    def validate(self, n):
        if self.matroid.ground_size != n:
            raise ValidationError(
                f"matroid ground set has {self.matroid.ground_size} elements but the instance has {n} boxes"
            )

    def selection(self, costs, within):
        within = sorted(set(int(i) for i in within))
        if self.matroid.rank(within) < self.matroid.full_rank:
            return None
        basis = self.matroid.min_weight_basis(costs, within)
        if any(math.isinf(float(costs[i])) for i in basis):
            return None
        return basis

    def best_cost_masks(self, masks, costs):
        masks = np.asarray(masks, dtype=bool)
        N, n = masks.shape
        masked = np.where(masks, costs, np.inf)
        order = np.argsort(masked, axis=1, kind="stable")
        chosen = np.zeros_like(masks)
        rank = np.zeros(N, dtype=np.int64)
        total = np.zeros(N)
        rows = np.arange(N)
        for j in range(n):
            e = order[:, j]
            usable = masks[rows, e]
            trial = chosen.copy()
            trial[rows, e] |= usable
            r = self.matroid.rank_many(trial)
            grow = usable & (r > rank)
            chosen[rows[grow], e[grow]] = True
            rank = np.where(grow, r, rank)
            total = total + np.where(grow, masked[rows, e], 0.0)
        return np.where(rank == self.matroid.full_rank, total, np.inf)

    def to_text(self):
        return f"matroid:{self.source}" if self.source else "matroid"

    def __repr__(self):
        return f"MatroidBasis({self.matroid.kind}, rank={self.matroid.full_rank})"


def parse_constraint(text: str, n: int | None = None) -> FeasibilityConstraint:
    """Parse ``one``, ``k:<K>`` or ``matroid:<path>``."""
    text = text.strip()
    if text == "one":
        c: FeasibilityConstraint = SelectOne()
    elif text.startswith("k:"):
        try:
            k = int(text[2:])
        except ValueError as exc:
            raise ValidationError(f"bad k in constraint {text!r}") from exc
        c = SelectOne() if k == 1 else SelectK(k)
    elif text.startswith("matroid:"):
        path = text[len("matroid:"):]
        c = MatroidBasis(load_matroid(path), source=path)
    else:
        raise ValidationError(f"unknown constraint {text!r}; use one | k:<K> | matroid:<path>")
    if n is not None:
        c.validate(n)
    return c


def check_satisfiable(instance, constraint: FeasibilityConstraint) -> None:
    """Raise if some positive-probability scenario has no finite feasible selection."""
    constraint.validate(instance.n)
    everything = range(instance.n)
    for s in range(instance.m):
        if instance.probs[s] > 0 and math.isinf(constraint.best_cost(instance.costs[:, s], everything)):
            raise InfeasibleInstanceError(f"scenario {s} admits no finite-cost feasible selection")
