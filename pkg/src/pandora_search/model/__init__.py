"""Instances, feasibility constraints, matroids, strategies and evaluators."""

from .constraints import (
    FeasibilityConstraint,
    MatroidBasis,
    SelectK,
    SelectOne,
    check_satisfiable,
    parse_constraint,
)
from .evaluate import evaluate_na, evaluate_spa, expectation, spa_scenario_costs
from .instance import BoxSpec, ScenarioSpec, SearchInstance
from .matroid import (
    ExplicitMatroid,
    GraphicMatroid,
    Matroid,
    PartitionMatroid,
    UniformMatroid,
    load_matroid,
    matroid_from_dict,
)
from .strategy import (
    FixedOrder,
    FixedSet,
    LowSetHit,
    OrderSource,
    PAEstimate,
    Run,
    ScenarioAware,
    StoppingRule,
    StopState,
    Strategy,
    evaluate_pa,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
