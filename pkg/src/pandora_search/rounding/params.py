"""Constants of the roundings."""

from __future__ import annotations

import math
from dataclasses import dataclass

ALPHA_SINGLE = 3 + 2 * math.sqrt(2)
ALPHA_K = 8.0
ALPHA_MATROID = 64.0
GAMMA = math.exp(-9 / 8)
MSSC_RATIO = 4.0
E_RATIO = math.e / (math.e - 1)

# ceilings quoted for the roundings
KCOVER_TIME_RATIO = 123.25
KCOVER_COST_RATIO = 11.85
KCOVER_CEILING = 124.0
SPA_PA_RATIO = ALPHA_SINGLE * E_RATIO  # about 9.2204


@dataclass(frozen=True)
class RoundingParams:
    alpha_single: float = ALPHA_SINGLE
    alpha_k: float = ALPHA_K
    alpha_matroid: float = ALPHA_MATROID
    gamma: float = GAMMA
    mssc_ratio: float = MSSC_RATIO
    max_phases: int = 40
    max_steps: int = 4096


DEFAULT_PARAMS = RoundingParams()
