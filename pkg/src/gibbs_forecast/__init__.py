"""Randomized Gibbs estimators and PAC-Bayesian model selection for
one-step time series forecasting."""

from .baseline import BaselineFit, aic_select, fit_ols
from .experiment import ExperimentConfig, ExperimentReport, run_experiment
from .gibbs import (DiscreteModel, GaussianProposal, GibbsDraw, PartitionEstimate,
                    log_partition, sample_gibbs, soft_min)
from .predictors import (ModelCatalog, ModelSpec, ParamPoint, complexity_bound,
                         lipschitz_sum, predict, sample_prior)
from .risk import EvaluationReport, RiskValue, empirical_risk, holdout_errors, oracle_risk
from .selection import (CriterionValue, SelectionMode, SelectionResult, TemperatureGrid,
                        build_grid, criterion_practical, criterion_theoretical, select)
from .series_gen import (DependenceBound, InnovationSpec, ProcessSpec, TimeSeries,
                         sample_innovation, simulate, wdp_bound_cbs, wdp_bound_phi_mixing)

__version__ = "0.1.0"

__all__ = [
    "BaselineFit",
    "CriterionValue",
    "DependenceBound",
    "DiscreteModel",
    "EvaluationReport",
    "ExperimentConfig",
    "ExperimentReport",
    "GaussianProposal",
    "GibbsDraw",
    "InnovationSpec",
    "ModelCatalog",
    "ModelSpec",
    "ParamPoint",
    "PartitionEstimate",
    "ProcessSpec",
    "RiskValue",
    "SelectionMode",
    "SelectionResult",
    "TemperatureGrid",
    "TimeSeries",
    "aic_select",
    "build_grid",
    "complexity_bound",
    "criterion_practical",
    "criterion_theoretical",
    "empirical_risk",
    "fit_ols",
    "holdout_errors",
    "lipschitz_sum",
    "log_partition",
    "oracle_risk",
    "predict",
    "run_experiment",
    "sample_gibbs",
    "sample_innovation",
    "sample_prior",
    "select",
    "simulate",
    "soft_min",
    "wdp_bound_cbs",
    "wdp_bound_phi_mixing",
]
