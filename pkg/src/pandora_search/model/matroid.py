"""Matroids given by a rank oracle, with a greedy minimum-weight basis."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import ValidationError


class Matroid:
    """A matroid on the ground set ``{0, ..., ground_size - 1}``.

    Subclasses implement :meth:`_rank` on a frozenset and, where the
    structure allows it, a vectorised :meth:`rank_many` over boolean masks.
    """

    kind = "abstract"

    def __init__(self, ground_size: int):
        if ground_size < 1:
            raise ValidationError("matroid ground set must be nonempty")
        self.ground_size = int(ground_size)
        self._full_rank = None

    def rank(self, subset: Iterable[int]) -> int:
        s = frozenset(int(i) for i in subset)
        for i in s:
            if not 0 <= i < self.ground_size:
                raise ValidationError(f"element {i} outside ground set of size {self.ground_size}")
        return self._rank(s)

    def _rank(self, s: frozenset) -> int:
        raise NotImplementedError

    @property
    def full_rank(self) -> int:
        if self._full_rank is None:
            self._full_rank = self._rank(frozenset(range(self.ground_size)))
        return self._full_rank

    def rank_many(self, masks: np.ndarray) -> np.ndarray:
        """Rank of each row of a boolean ``(N, ground_size)`` mask array."""
        masks = np.asarray(masks, dtype=bool)
        return np.array([self._rank(frozenset(np.flatnonzero(row).tolist())) for row in masks], dtype=np.int64)

    def is_independent(self, subset: Iterable[int]) -> bool:
        s = list(subset)
        return len(set(s)) == len(s) and self.rank(s) == len(s)

    def spans(self, subset: Iterable[int]) -> bool:
        return self.rank(subset) == self.full_rank

    def loops(self) -> list[int]:
        return [i for i in range(self.ground_size) if self._rank(frozenset([i])) == 0]

    def min_weight_basis(self, weights, within: Iterable[int] | None = None) -> list[int]:
        """Greedy minimum-weight basis of the restriction to ``within``.

        Ties are broken by element index. The result spans ``within`` (not
        necessarily the whole ground set).
        """
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.ground_size,):
            raise ValidationError("weights must have one entry per ground element")
        pool = range(self.ground_size) if within is None else sorted(set(int(i) for i in within))
        chosen: list[int] = []
        rank = 0
        for i in sorted(pool, key=lambda j: (w[j], j)):
            r = self._rank(frozenset(chosen + [i]))
            if r > rank:
                chosen.append(i)
                rank = r
        return sorted(chosen)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


class UniformMatroid(Matroid):
    kind = "uniform"

    def __init__(self, ground_size: int, k: int):
        super().__init__(ground_size)
        if not 0 <= k <= ground_size:
            raise ValidationError(f"uniform matroid rank {k} outside [0, {ground_size}]")
        self.k = int(k)

    def _rank(self, s):
        return min(len(s), self.k)

    def rank_many(self, masks):
        return np.minimum(np.asarray(masks, dtype=bool).sum(axis=1), self.k)

    def to_dict(self):
        return {"kind": "uniform", "n": self.ground_size, "k": self.k}


class PartitionMatroid(Matroid):
    kind = "partition"

    def __init__(self, segments: Sequence[Sequence[int]], capacities: Sequence[int]):
        segs = [tuple(int(i) for i in seg) for seg in segments]
        flat = [i for seg in segs for i in seg]
        if sorted(flat) != list(range(len(flat))):
            raise ValidationError("partition segments must cover 0..n-1 exactly once")
        if len(capacities) != len(segs):
            raise ValidationError("one capacity per segment required")
        if any(c < 0 for c in capacities):
            raise ValidationError("capacities must be nonnegative")
        super().__init__(len(flat))
        self.segments = segs
        self.capacities = [int(c) for c in capacities]
        self._seg_of = np.empty(self.ground_size, dtype=np.int64)
        for j, seg in enumerate(segs):
            self._seg_of[list(seg)] = j

    def _rank(self, s):
        counts = np.bincount(self._seg_of[list(s)], minlength=len(self.segments)) if s else np.zeros(len(self.segments), int)
        return int(np.minimum(counts, self.capacities).sum())

    def rank_many(self, masks):
        masks = np.asarray(masks, dtype=bool)
        total = np.zeros(masks.shape[0], dtype=np.int64)
        for seg, cap in zip(self.segments, self.capacities):
            total += np.minimum(masks[:, list(seg)].sum(axis=1), cap)
        return total

    def to_dict(self):
        return {"kind": "partition", "segments": [list(s) for s in self.segments], "capacities": list(self.capacities)}


class GraphicMatroid(Matroid):
    """Cycle matroid of a multigraph; element ``i`` is edge ``edges[i]``."""

    kind = "graphic"

    def __init__(self, edges: Sequence[Sequence[int]], num_vertices: int | None = None):
        es = [(int(u), int(v)) for u, v in edges]
        super().__init__(len(es))
        nv = 1 + max(max(u, v) for u, v in es) if num_vertices is None else int(num_vertices)
        if any(not (0 <= u < nv and 0 <= v < nv) for u, v in es):
            raise ValidationError("edge endpoint outside vertex range")
        self.edges = es
        self.num_vertices = nv

    def _rank(self, s):
        parent = list(range(self.num_vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        r = 0
        for i in s:
            u, v = self.edges[i]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                r += 1
        return r

    def to_dict(self):
        return {"kind": "graphic", "num_vertices": self.num_vertices, "edges": [list(e) for e in self.edges]}


class ExplicitMatroid(Matroid):
    """Matroid listed by its independent sets; validated on construction."""

    kind = "explicit"

    def __init__(self, ground_size: int, independent_sets: Iterable[Iterable[int]]):
        super().__init__(ground_size)
        fam = {frozenset(int(i) for i in s) for s in independent_sets}
        fam.add(frozenset())
        for s in fam:
            if any(not 0 <= i < ground_size for i in s):
                raise ValidationError("independent set mentions an element outside the ground set")
        for s in fam:
            for i in s:
                if s - {i} not in fam:
                    raise ValidationError(f"independent sets not closed under subsets: {sorted(s)} minus {i}")
        for a in fam:
            for b in fam:
                if len(a) > len(b) and not any(b | {x} in fam for x in a - b):
                    raise ValidationError(f"exchange axiom fails for {sorted(a)} and {sorted(b)}")
        self.independent_sets = fam

    def _rank(self, s):
        return max(len(i) for i in self.independent_sets if i <= s)

    def to_dict(self):
        sets = sorted((sorted(s) for s in self.independent_sets), key=lambda x: (len(x), x))
        return {"kind": "explicit", "n": self.ground_size, "independent_sets": sets}


def matroid_from_dict(data: dict) -> Matroid:
    kind = data.get("kind")
    try:
        if kind == "uniform":
            return UniformMatroid(data["n"], data["k"])
        if kind == "partition":
            caps = data.get("capacities") or [1] * len(data["segments"])
            return PartitionMatroid(data["segments"], caps)
        if kind == "graphic":
            return GraphicMatroid(data["edges"], data.get("num_vertices"))
        if kind == "explicit":
            return ExplicitMatroid(data["n"], data["independent_sets"])
    except KeyError as exc:
        raise ValidationError(f"matroid document missing field {exc}") from exc
    raise ValidationError(f"unknown matroid kind {kind!r}")


def load_matroid(path) -> Matroid:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"matroid file is not valid JSON: {exc}") from exc
    return matroid_from_dict(data)

