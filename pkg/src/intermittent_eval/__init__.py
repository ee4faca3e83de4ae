"""Intermittent demand forecasters, error measures and mean-based evaluation."""
from .demandgen import DemandSeries, GeneratorSpec, MeanPath, analytic_mean, generate
from .forecast import Forecaster, run_forecaster
from .harness import (
    ExperimentReport,
    ExperimentSpec,
    check_axiom,
    reproduce_table,
    run_experiment,
)
from .meanest import MeanEstimatorSpec, estimate_mean_path
from .measures import ErrorSample, MeasureId, MeasureValue, evaluate
from .rng import LogarithmicParams, RandomStream

__all__ = [
    "DemandSeries", "ErrorSample", "ExperimentReport", "ExperimentSpec", "Forecaster",
    "GeneratorSpec", "LogarithmicParams", "MeanEstimatorSpec", "MeanPath", "MeasureId",
    "MeasureValue", "RandomStream", "analytic_mean", "check_axiom", "estimate_mean_path",
    "evaluate", "generate", "reproduce_table", "run_experiment", "run_forecaster",
]
__version__ = "0.1.0"
