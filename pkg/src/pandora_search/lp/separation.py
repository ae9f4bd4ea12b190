"""Minimising ``w * r(A) - sum_{i in A} v_i`` over box sets ``A``.

Both lazy matroid families reduce to this problem. Uniform and partition
matroids decompose by segment and are solved in closed form; any other
matroid is scanned exhaustively, which is fine up to 20 elements.
"""

from __future__ import annotations

import numpy as np

from ..errors import BudgetError
from ..model.matroid import Matroid, PartitionMatroid, UniformMatroid

MAX_BRUTE_FORCE = 20

_rank_tables: dict[int, tuple[Matroid, np.ndarray]] = {}


def _segment_best(w: float, v: np.ndarray, cap: int) -> tuple[float, list[int]]:
    """Best choice inside one segment: the ``c`` largest values for some count ``c``."""
    order = np.argsort(-v, kind="stable")
    top = np.concatenate([[0.0], np.cumsum(v[order])])
    counts = np.arange(v.size + 1)
    vals = w * np.minimum(counts, cap) - top
    c = int(np.argmin(vals))
    return float(vals[c]), order[:c].tolist()


def rank_table(matroid: Matroid) -> np.ndarray:
    """Rank of every subset, indexed by bitmask (bit ``i`` = element ``i``)."""
    key = id(matroid)
    hit = _rank_tables.get(key)
    if hit is not None and hit[0] is matroid:
        return hit[1]
    n = matroid.ground_size
    if n > MAX_BRUTE_FORCE:
        raise BudgetError(f"exhaustive separation supports at most {MAX_BRUTE_FORCE} elements, got {n}")
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    ranks = np.empty(masks.size, dtype=np.int64)
    step = 1 << 14
    for lo in range(0, masks.size, step):
        ranks[lo:lo + step] = matroid.rank_many(bits[lo:lo + step])
    _rank_tables[key] = (matroid, ranks)
    return ranks


def _subset_sums(v: np.ndarray) -> np.ndarray:
    sums = np.zeros(1)
    for x in v:
        sums = np.concatenate([sums, sums + x])
    return sums


def minimize_rank_gap(matroid: Matroid, w: float, v) -> tuple[float, tuple]:
    """Return ``(min_A w*r(A) - v(A), argmin A)`` with ``w >= 0``.

    Ties prefer the smallest set found first; the empty set gives 0, so the
    minimum is never positive.
    """
    v = np.asarray(v, dtype=float)
    if isinstance(matroid, UniformMatroid):
        val, A = _segment_best(w, v, matroid.k)
        return val, tuple(sorted(A))
    if isinstance(matroid, PartitionMatroid):
        total, chosen = 0.0, []
        for seg, cap in zip(matroid.segments, matroid.capacities):
            idx = np.array(seg)
            val, A = _segment_best(w, v[idx], cap)
            total += val
            chosen.extend(idx[A].tolist())
        return total, tuple(sorted(chosen))
    ranks = rank_table(matroid)
    vals = w * ranks - _subset_sums(v)
    mask = int(np.argmin(vals))
    A = tuple(i for i in range(matroid.ground_size) if mask >> i & 1)
    return float(vals[mask]), A
