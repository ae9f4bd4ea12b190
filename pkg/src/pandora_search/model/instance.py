"""Search instances: boxes, scenarios and the (possibly infinite) cost matrix."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..errors import ValidationError

PROB_TOL = 1e-9
INF = math.inf


@dataclass(frozen=True)
class BoxSpec:
    id: int
    probe_time: int = 1


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    probability: float


class SearchInstance:
    """Boxes with integer probing times and a finite scenario distribution.

    ``costs[i, s]`` is the cost of box ``i`` in scenario ``s``; ``math.inf``
    marks a box that can never be chosen in that scenario. Arrays are
    read-only after construction, so instances can be shared freely.
    """

    __slots__ = ("_costs", "_probs", "_times", "max_probe_time")

    def __init__(self, costs, probs=None, probe_times=None, max_probe_time: int | None = None):
        c = np.array(costs, dtype=float)
        if c.ndim != 2:
            raise ValidationError("cost matrix must be 2-dimensional (boxes x scenarios)")
        n, m = c.shape
        if n < 1 or m < 1:
            raise ValidationError("need at least one box and one scenario")
        if np.isnan(c).any():
            raise ValidationError("costs must not be NaN")
        if (c < 0).any():
            raise ValidationError("costs must be nonnegative")

        if probs is None:
            p = np.full(m, 1.0 / m)
        else:
            p = np.array(probs, dtype=float)
        if p.shape != (m,):
            raise ValidationError(f"expected {m} scenario probabilities, got shape {p.shape}")
        if not np.isfinite(p).all() or (p < 0).any():
            raise ValidationError("scenario probabilities must be finite and nonnegative")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"scenario probabilities sum to {total!r}, not 1")
        p = p / total

        if probe_times is None:
            t = np.ones(n, dtype=np.int64)
        else:
            raw = np.asarray(probe_times)
            if raw.shape != (n,):
                raise ValidationError(f"expected {n} probing times, got shape {raw.shape}")
            if not np.all(np.asarray(raw, dtype=float) == np.round(np.asarray(raw, dtype=float))):
                raise ValidationError("probing times must be integers")
            t = raw.astype(np.int64)
        if (t < 1).any():
            raise ValidationError("probing times must be >= 1")
        if max_probe_time is not None and (t > max_probe_time).any():
            raise ValidationError(f"probing times exceed the declared bound P={max_probe_time}")

        for arr in (c, p, t):
            arr.setflags(write=False)
        object.__setattr__(self, "_costs", c)
        object.__setattr__(self, "_probs", p)
        object.__setattr__(self, "_times", t)
        object.__setattr__(self, "max_probe_time", max_probe_time)

    def __setattr__(self, name, value):
        raise AttributeError("SearchInstance is immutable")

    @property
    def costs(self) -> np.ndarray:
        return self._costs

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def probe_times(self) -> np.ndarray:
        return self._times

    @property
    def n(self) -> int:
        return self._costs.shape[0]

    @property
    def m(self) -> int:
        return self._costs.shape[1]

    @property
    def boxes(self) -> list[BoxSpec]:
        return [BoxSpec(i, int(p)) for i, p in enumerate(self._times)]

    @property
    def scenarios(self) -> list[ScenarioSpec]:
        return [ScenarioSpec(s, float(p)) for s, p in enumerate(self._probs)]

    @property
    def unit_times(self) -> bool:
        return bool((self._times == 1).all())

    @property
    def horizon(self) -> int:
        """Total probing time of all boxes (the LP time horizon)."""
        return int(self._times.sum())

    @classmethod
    def from_specs(cls, boxes: Sequence[BoxSpec], scenarios: Sequence[ScenarioSpec], costs):
        return cls(costs, [s.probability for s in scenarios], [b.probe_time for b in boxes])

    def with_costs(self, costs) -> "SearchInstance":
        return SearchInstance(costs, self._probs, self._times, self.max_probe_time)

    def with_probe_times(self, probe_times) -> "SearchInstance":
        return SearchInstance(self._costs, self._probs, probe_times, self.max_probe_time)

    def scaled(self, factor: int) -> "SearchInstance":
        return SearchInstance(self._costs * factor, self._probs, self._times * factor)

    def __eq__(self, other):
        if not isinstance(other, SearchInstance):
            return NotImplemented
        return (
            np.array_equal(self._costs, other._costs)
            and np.array_equal(self._probs, other._probs)
            and np.array_equal(self._times, other._times)
        )

    def __hash__(self):
        return hash((self._costs.tobytes(), self._probs.tobytes(), self._times.tobytes()))

    def __repr__(self):
        return f"SearchInstance(n={self.n}, m={self.m}, unit_times={self.unit_times})"

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "boxes": [{"probe_time": int(p)} for p in self._times],
            "scenarios": [
                {"prob": float(self._probs[s]), "costs": [_encode_cost(v) for v in self._costs[:, s]]}
                for s in range(self.m)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SearchInstance":
        try:
            boxes = data["boxes"]
            scenarios = data["scenarios"]
            times = [int(b.get("probe_time", 1)) for b in boxes]
            probs = [float(s["prob"]) for s in scenarios]
            cols = [[_decode_cost(v) for v in s["costs"]] for s in scenarios]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed instance document: {exc}") from exc
        for j, col in enumerate(cols):
            if len(col) != len(boxes):
                raise ValidationError(f"scenario {j} lists {len(col)} costs for {len(boxes)} boxes")
        if not boxes or not scenarios:
            raise ValidationError("need at least one box and one scenario")
        return cls(np.array(cols, dtype=float).T, probs, times)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "SearchInstance":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"instance is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "SearchInstance":
        return cls.from_json(Path(path).read_text())


def _encode_cost(v: float):
    if math.isinf(v):
        return "inf"
    return int(v) if float(v).is_integer() else float(v)


def _decode_cost(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        try:
            return float(v)
        except ValueError as exc:
            raise ValidationError(f"bad cost literal {v!r}") from exc
    if v is None:
        raise ValidationError("cost may not be null")
    return float(v)
