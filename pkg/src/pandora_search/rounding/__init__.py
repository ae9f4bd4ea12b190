"""Randomized roundings of the LP relaxations and the min-sum cover greedy."""

from .algorithms import (
    MatroidSelection,
    PhasedOrder,
    PhaseSelection,
    RatioStop,
    SampledOrder,
    StepwiseOrder,
    build_low_sets,
    greedy_mssc,
    kcover_tables,
    low_set_costs,
    matroid_selection_probs,
    matroid_tables,
    mssc_cover_times,
    na_stop_probability,
    na_stop_ratios,
    round_kcover,
    round_matroid,
    round_na,
    round_spa_mssc,
    threshold_times,
)
from .fast import fast_round_kcover, fast_round_matroid, fast_round_na
from .params import (
    ALPHA_K,
    ALPHA_MATROID,
    ALPHA_SINGLE,
    DEFAULT_PARAMS,
    E_RATIO,
    GAMMA,
    KCOVER_CEILING,
    KCOVER_COST_RATIO,
    KCOVER_TIME_RATIO,
    MSSC_RATIO,
    SPA_PA_RATIO,
    RoundingParams,
)

__all__ = [name for name in dir() if not name.startswith("_")]
