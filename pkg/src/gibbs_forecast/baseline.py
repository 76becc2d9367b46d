"""Least-squares autoregression with AIC order selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .predictors import ModelSpec, ParamPoint, lag_matrix
from .series_gen import TimeSeries


class RankDeficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineFit:
    p_aic: int
    coeffs: tuple[float, ...]
    rss: float
    aic_table: dict[int, float]

    def param_point(self) -> ParamPoint:
        """The fit as an (unconstrained) linear predictor."""
        model = ModelSpec("linear", self.p_aic, 1, radius=math.inf, lip_cap=math.inf)
        return ParamPoint(model, np.asarray(self.coeffs))

    def to_dict(self) -> dict:
        return {"p_aic": self.p_aic, "coeffs": list(self.coeffs), "rss": self.rss,
                "aic_table": {str(k): v for k, v in self.aic_table.items()}}


def _design(x: np.ndarray, p: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    lags = lag_matrix(x, p)[start - p:]
    return np.column_stack([np.ones(len(lags)), lags]), x[start:]


def fit_ols(series: TimeSeries | np.ndarray, p: int,
            start: int | None = None) -> tuple[np.ndarray, float]:
    """OLS of ``X_t`` on ``(1, X_{t-1}, ..., X_{t-p})`` over ``t = start+1..n``.

    Solves the normal equations by Cholesky factorization.  Returns
    ``(coeffs, rss)`` with ``coeffs = (intercept, a_1, ..., a_p)``.
    """
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    start = p if start is None else start
    if start < p:
        raise ValueError(f"start={start} must be >= p={p}")
    if x.size <= 2 * (p + 1):
        raise ValueError(f"n={x.size} must exceed 2(p+1)={2 * (p + 1)}")
    X, y = _design(x, p, start)
    rank = np.linalg.matrix_rank(X)
    if rank < p + 1:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {p + 1} "
                                  f"(intercept + {p} lags); series is degenerate")
    try:
        coeffs = cho_solve(cho_factor(X.T @ X), X.T @ y)
    except LinAlgError as exc:
        raise RankDeficiencyError(f"normal equations are singular for p={p}") from exc
    resid = y - X @ coeffs
    return coeffs, float(math.fsum(resid * resid))


def aic_select(series: TimeSeries | np.ndarray, p_max: int) -> BaselineFit:
    """Choose ``p`` in ``1..p_max`` minimising ``m log(rss/m) + 2(p+2)``.

    Every order is fitted on the common sample ``t = p_max+1..n`` (``m`` terms).
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    if x.size <= 2 * (p_max + 1):
        raise ValueError(f"n={x.size} must exceed 2(p_max+1)={2 * (p_max + 1)}")
    m = x.size - p_max
    y = x[p_max:]
    # noiseless series: rss below rounding level is treated as equal across orders
    floor = 1e-20 * max(float(y @ y), 1e-300)
    fits = {}
    table = {}
    for p in range(1, p_max + 1):
        try:
            coeffs, rss = fit_ols(x, p, start=p_max)
        except RankDeficiencyError:
            if p == 1:
                raise
            # collinear lags (e.g. a noiseless recursion): the minimum-norm solution
            # fits no better than the nested lower order, so AIC still ranks it
            X, yy = _design(x, p, p_max)
            coeffs = np.linalg.lstsq(X, yy, rcond=None)[0]
            resid = yy - X @ coeffs
            rss = float(math.fsum(resid * resid))
        fits[p] = (coeffs, rss)
        table[p] = m * math.log(max(rss, floor) / m) + 2 * (p + 2)
    best = min(table, key=lambda k: (table[k], k))
    coeffs, rss = fits[best]
    return BaselineFit(best, tuple(float(c) for c in coeffs), rss, table)
