"""Strategy documents: ``{"order": ..., "stopping": {"kind": ..., ...}, "seed": ...}``."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..model.constraints import parse_constraint
from ..model.matroid import matroid_from_dict
from ..model.strategy import FixedOrder, FixedSet, LowSetHit, ScenarioAware, Strategy
from ..oracle import TableStop
from ..rounding.algorithms import (
    MatroidSelection,
    PhasedOrder,
    PhaseSelection,
    RatioStop,
    SampledOrder,
    StepwiseOrder,
)
from ..ski import SkiRentalDriven


def _cost(v):
    return float("inf") if v == "inf" else float(v)


def order_from_json(doc):
    if isinstance(doc, list):
        return FixedOrder(doc)
    kind = doc.get("kind")
    if kind == "sampled":
        return SampledOrder(doc["weights"])
    if kind == "phased":
        return PhasedOrder(np.asarray(doc["q"]), int(doc["max_phases"]))
    if kind == "stepwise":
        return StepwiseOrder(np.asarray(doc["X"]), float(doc["a"]), int(doc["max_steps"]))
    raise ValidationError(f"unknown order kind {kind!r}")


def stopping_from_json(doc: dict, n: int | None = None):
    kind = doc.get("kind")
    if kind == "fixed-set":
        return FixedSet(doc["probe_set"])
    if kind == "scenario-aware":
        return ScenarioAware(doc["order"])
    if kind == "low-set-hit":
        return LowSetHit(doc["low_sets"])
    if kind == "ski-rental":
        constraint = parse_constraint(doc["constraint"], n) if doc.get("constraint") else None
        return SkiRentalDriven(doc.get("order"), constraint)
    if kind == "lp-ratio-stop":
        return RatioStop(np.asarray(doc["ratio"]))
    if kind == "phase-selection":
        return PhaseSelection(np.asarray(doc["sel"]), np.asarray(doc["tstar"]), int(doc["k"]))
    if kind == "matroid-selection":
        return MatroidSelection(np.asarray(doc["X"]), np.asarray(doc["Z"]), float(doc["a"]),
                                np.asarray(doc["tstar"]), matroid_from_dict(doc["matroid"]))
    if kind == "table":
        return TableStop({tuple(_cost(v) for v in key): bool(flag) for key, flag in doc["stop"]})
    raise ValidationError(f"unknown stopping kind {kind!r}")


def strategy_from_json(doc: dict, n: int | None = None) -> Strategy:
    try:
        return Strategy(order_from_json(doc["order"]), stopping_from_json(doc["stopping"], n), doc.get("seed"))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed strategy document: {exc}") from exc


def dump_strategy(strategy: Strategy) -> str:
    return json.dumps(strategy.to_json(), separators=(",", ":")) + "\n"


def load_strategy(path, n: int | None = None) -> Strategy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"strategy file is not valid JSON: {exc}") from exc
    return strategy_from_json(doc, n)
