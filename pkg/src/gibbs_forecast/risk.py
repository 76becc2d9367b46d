"""Empirical l1 risk, hold-out errors and Monte-Carlo true risk."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from .predictors import ModelSpec, ParamPoint, lag_matrix, predict_batch
from .rng import derive_seed
from .series_gen import ProcessSpec, TimeSeries, simulate


@dataclass(frozen=True)
class RiskValue:
    value: float
    n_terms: int
    stderr: float | None = None

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ValueError("risk must be non-negative")
        if self.n_terms < 1:
            raise ValueError("risk needs at least one term")


@dataclass(frozen=True)
class EvaluationReport:
    err1: float
    err2: float
    p_used: int
    n_eval: int

    def to_dict(self) -> dict:
        return {"err1": self.err1, "err2": self.err2, "p_used": self.p_used,
                "n_eval": self.n_eval}


def _values(series: TimeSeries | np.ndarray) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)


def residuals(theta: ParamPoint, series: TimeSeries | np.ndarray, start: int | None = None) -> np.ndarray:
    """One-step errors ``X_t - f_theta(X_{t-1}..X_{t-p})`` for ``t = start+1..n``.

    ``start`` defaults to ``p`` (the first time with a full window).
    """
    x = _values(series)
    p = theta.model.p
    start = p if start is None else start
    if start < p:
        raise ValueError(f"start={start} leaves incomplete windows for p={p}")
    if x.size <= start:
        raise ValueError(f"series of length {x.size} has no terms after t={start}")
    windows = lag_matrix(x, p)[start - p:]
    pred = predict_batch(theta.model, theta.coords[None, :], windows)[:, 0]
    return x[start:] - pred


def empirical_risk(theta: ParamPoint, series: TimeSeries | np.ndarray) -> RiskValue:
    """Mean absolute one-step error over ``t = p+1..n``."""
    x = _values(series)
    if x.size <= theta.model.p:
        raise ValueError(f"series length {x.size} must exceed p={theta.model.p}")
    res = residuals(theta, x)
    return RiskValue(math.fsum(np.abs(res)) / res.size, res.size)


def empirical_risks(model: ModelSpec, thetas: np.ndarray, series: TimeSeries | np.ndarray,
                    chunk: int = 4096) -> np.ndarray:
    """Vectorised :func:`empirical_risk` for the rows of ``thetas``."""
    x = _values(series)
    if x.size <= model.p:
        raise ValueError(f"series length {x.size} must exceed p={model.p}")
    windows = lag_matrix(x, model.p)
    target = x[model.p:, None]
    thetas = np.atleast_2d(thetas)
    out = np.empty(len(thetas))
    for lo in range(0, len(thetas), chunk):
        block = thetas[lo:lo + chunk]
        out[lo:lo + chunk] = np.mean(np.abs(target - predict_batch(model, block, windows)), axis=0)
    return out


def holdout_errors(theta: ParamPoint, eval_series: TimeSeries | np.ndarray, skip: int) -> EvaluationReport:
    """Mean absolute and mean squared one-step errors over ``t = skip+1..n``.

    With ``skip = 8`` and ``n = 500`` this averages the 492 terms ``t = 9..500``.
    """
    x = _values(eval_series)
    if skip < theta.model.p:
        raise ValueError(f"skip={skip} must be >= p={theta.model.p}")
    if x.size <= skip:
        raise ValueError(f"evaluation series of length {x.size} must exceed skip={skip}")
    res = residuals(theta, x, start=skip)
    err1 = math.fsum(np.abs(res)) / res.size
    err2 = math.fsum(res * res) / res.size
    return EvaluationReport(err1, err2, theta.model.p, res.size)


def oracle_risk(theta: ParamPoint, spec: ProcessSpec, reps: int, horizon_n: int,
                seed: int, burn_in: int | None = None) -> RiskValue:
    """Monte-Carlo estimate of the true l1 risk ``E|X_t - f_theta(...)|``.

    Averages :func:`empirical_risk` over ``reps`` fresh series of length
    ``horizon_n``; ``stderr`` is the standard error across replications.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    risks = []
    terms = 0
    for r in range(reps):
        s = simulate(spec, horizon_n, burn_in, derive_seed(seed, "oracle", r))
        rv = empirical_risk(theta, s)
        risks.append(rv.value)
        terms += rv.n_terms
    value = math.fsum(risks) / reps
    se = statistics.stdev(risks) / math.sqrt(reps) if reps > 1 else float("nan")
    return RiskValue(value, terms, se)
