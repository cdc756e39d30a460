"""IPW estimation of weighted average treatment effects (ATE/ATT/ATO) with
simple and propensity-aware sandwich variances and conservativeness criteria."""

from .criteria import (
    CriterionReport,
    Hypothesis,
    continuous_condition,
    correction_term,
    evaluate_criterion,
    shape_function,
)
from .estimands import Estimand, WateEstimate, estimate_wate, unit_weight, weight_derivative, weight_value
from .estimator import WATEEstimator
from .propensity import Dataset, LogisticPropensity, PropensityFit, fit_logistic, predict
from .simulation import ScenarioConfig, SimulationSummary, population_criterion, preset, run_scenario
from .variance import (
    CiResult,
    VarianceComponents,
    confidence_interval,
    estimate_components,
    exact_variance,
    oracle_sandwich,
    simple_variance,
)

__version__ = "0.1.0"

__all__ = [
    "CiResult",
    "CriterionReport",
    "Dataset",
    "Estimand",
    "Hypothesis",
    "LogisticPropensity",
    "PropensityFit",
    "ScenarioConfig",
    "SimulationSummary",
    "VarianceComponents",
    "WATEEstimator",
    "WateEstimate",
    "confidence_interval",
    "continuous_condition",
    "correction_term",
    "estimate_components",
    "estimate_wate",
    "evaluate_criterion",
    "exact_variance",
    "fit_logistic",
    "oracle_sandwich",
    "population_criterion",
    "predict",
    "preset",
    "run_scenario",
    "shape_function",
    "simple_variance",
    "unit_weight",
    "weight_derivative",
    "weight_value",
]
