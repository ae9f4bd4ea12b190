"""Instance generators, sampling experiments, pipelines, reports and the CLI."""

from .generators import (
    FAMILIES,
    GeneratorSpec,
    concentration_failures,
    empirical_weights,
    general_times,
    generate,
    mssc_pure,
    partition_matroid_lb,
    random_correlated,
    random_uniform,
    sample_scenarios,
    set_cover_value,
    setcover_lb,
)
from .pipeline import METHODS, EvaluationReport, MethodResult, Ratio, bench, oracle_values, pipeline_pa, report_csv
from .strategy_io import dump_strategy, load_strategy, strategy_from_json

__all__ = [name for name in dir() if not name.startswith("_")]
