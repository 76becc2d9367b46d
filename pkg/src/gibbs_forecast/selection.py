"""Temperature grids, penalized criteria and the final model selection.

Two criteria are available for a model ``(p, ell)`` at temperature ``lam``:

theoretical::

    soft_min(lam) + log(n * floor(n/2) * m_p) / lam
                  + lam * (1 + L)^2 * log(n)^3 / (n * (1 - p/n)^2)

practical::

    soft_min(lam) + lam * K^2 / n

where ``soft_min(lam) = -(1/lam) log integral exp(-lam r_n) d pi``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .gibbs import (DEFAULT_MAX_PROPOSALS, DEFAULT_MC_SAMPLES, DiscreteModel, GibbsDraw,
                    partition_from_risks, prior_risks, sample_gibbs)
from .predictors import ModelCatalog, ParamPoint
from .rng import derive_seed
from .series_gen import TimeSeries

STUDY_GRID = tuple(float(2 ** k) for k in range(1, 11))
GRID_PRESETS = ("fixed", "theoretical")
SCHEMA_VERSION = 1


def theoretical_k(n: int, lip_cap: float = 1.0) -> float:
    """``K`` for which the practical penalty equals the theoretical variance term
    (ignoring the ``(1 - p/n)`` factor): ``(1 + L) log(n)^{3/2}``."""
    return (1.0 + lip_cap) * math.log(n) ** 1.5


@dataclass(frozen=True)
class TemperatureGrid:
    values: tuple[float, ...]
    g_multipliers: tuple[float, ...] = ()
    interval: tuple[float, float] | None = None
    base: float | None = None
    degenerate: bool = False
    preset: str = "theoretical"

    @property
    def c_check(self) -> float | None:
        return self.g_multipliers[0] if self.g_multipliers else None

    @property
    def c_hat(self) -> float | None:
        return self.g_multipliers[-1] if self.g_multipliers else None

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def to_dict(self) -> dict[str, Any]:
        return {"values": list(self.values), "g_multipliers": list(self.g_multipliers),
                "c_check": self.c_check, "c_hat": self.c_hat,
                "interval": list(self.interval) if self.interval else None,
                "base": self.base, "degenerate": self.degenerate, "preset": self.preset}


def default_multipliers(n0: int = 16) -> tuple[float, ...]:
    return tuple(float(2 ** k) for k in range(n0))


def min_sample_size(lip_cap: float) -> int:
    return math.ceil(8.0 * math.e * (1.0 + lip_cap))


def build_grid(model: Any, n: int, g_multipliers: Sequence[float] | None = None) -> TemperatureGrid:
    """Grid ``{g_i sqrt(d n) log(d n) / ((1+L) log(n)^{3/2})}`` cut to ``[2e, n/(4(1+L))]``.

    An empty intersection yields the base value clamped into the interval,
    flagged ``degenerate``.
    """
    L = model.lip_cap
    need = min_sample_size(L)
    if n < need:
        raise ValueError(f"n={n} is below the minimum 8e(1+L) = {8 * math.e * (1 + L):.4g}")
    if model.d is None:
        raise ValueError(f"{model.key}: complexity d is not set")
    g = tuple(sorted(float(v) for v in (g_multipliers or default_multipliers())))
    if len(set(g)) != len(g) or g[0] <= 0:
        raise ValueError("g multipliers must be positive and distinct")
    dn = model.d * n
    base = math.sqrt(dn) * math.log(dn) / ((1.0 + L) * math.log(n) ** 1.5)
    lo, hi = 2.0 * math.e, n / (4.0 * (1.0 + L))
    kept = sorted({gi * base for gi in g if lo <= gi * base <= hi})
    if kept:
        return TemperatureGrid(tuple(kept), g, (lo, hi), base)
    return TemperatureGrid((min(max(base, lo), hi),), g, (lo, hi), base, degenerate=True)


def study_grid() -> TemperatureGrid:
    """Fixed grid ``{2, 4, ..., 1024}`` used in the AR simulation study."""
    return TemperatureGrid(STUDY_GRID, preset="fixed")


def resolve_grid(model: Any, n: int, grid: str | Sequence[float] | TemperatureGrid,
                 g_multipliers: Sequence[float] | None = None) -> TemperatureGrid:
    if isinstance(grid, TemperatureGrid):
        return grid
    if isinstance(grid, str):
        if grid == "fixed":
            return study_grid()
        if grid == "theoretical":
            return build_grid(model, n, g_multipliers)
        raise ValueError(f"unknown grid preset {grid!r}")
    values = tuple(sorted(float(v) for v in grid))
    if not values or values[0] <= 0:
        raise ValueError("explicit grid needs positive values")
    return TemperatureGrid(values, preset="explicit")


@dataclass(frozen=True)
class CriterionValue:
    p: int
    ell: int
    lam: float
    value: float
    soft_min_part: float
    weight_part: float
    variance_part: float
    se_log: float = 0.0
    model_index: int = 0
    family: str = "linear"
    degenerate: bool = False

    @property
    def penalty(self) -> float:
        return self.weight_part + self.variance_part

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "p": self.p, "ell": self.ell, "lambda": self.lam,
                "value": self.value, "soft_min": self.soft_min_part,
                "weight_part": self.weight_part, "variance_part": self.variance_part,
                "se_log": self.se_log, "degenerate": self.degenerate}


def _cell(model, lam, soft, weight, variance, **kw) -> CriterionValue:
    return CriterionValue(model.p, model.ell, float(lam), soft + weight + variance,
                          soft, weight, variance, family=model.family, **kw)


def criterion_theoretical(model: Any, lam: float, log_z: float, n: int, m_p: int = 1,
                          **kw) -> CriterionValue:
    p = model.p
    if p >= n:
        raise ValueError(f"p={p} must be < n={n}")
    L = model.lip_cap
    weight = math.log(n * (n // 2) * m_p) / lam
    variance = lam * (1.0 + L) ** 2 * math.log(n) ** 3 / (n * (1.0 - p / n) ** 2)
    soft = kw.pop("soft_min_part", -log_z / lam)
    return _cell(model, lam, soft, weight, variance, **kw)


def criterion_practical(model: Any, lam: float, log_z: float, n: int, K: float,
                        **kw) -> CriterionValue:
    if model.p >= n:
        raise ValueError(f"p={model.p} must be < n={n}")
    if not K > 0:
        raise ValueError("K must be > 0")
    soft = kw.pop("soft_min_part", -log_z / lam)
    return _cell(model, lam, soft, 0.0, lam * K * K / n, **kw)


@dataclass(frozen=True)
class SelectionMode:
    """``kind`` is ``"theoretical"`` or ``"practical"`` (the latter needs ``K``)."""

    kind: str = "practical"
    K: float | None = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("theoretical", "practical"):
            raise ValueError(f"unknown selection mode {self.kind!r}")
        if self.kind == "practical" and not (self.K is not None and self.K > 0):
            raise ValueError("practical mode needs K > 0")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "K": self.K if self.kind == "practical" else None}


@dataclass(frozen=True)
class SelectionResult:
    p_hat: int
    ell_hat: int
    lambda_hat: float
    theta_hat: ParamPoint
    table: tuple[CriterionValue, ...]
    mode: SelectionMode
    draw: GibbsDraw | None = None
    margin: float = math.inf
    margin_se: float = 0.0
    grids: dict[str, dict] = field(default_factory=dict)

    @property
    def winner(self) -> CriterionValue:
        return min(self.table, key=_order_key)

    @property
    def near_tie(self) -> bool:
        return self.margin <= 2.0 * self.margin_se

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "p_hat": self.p_hat, "ell_hat": self.ell_hat, "lambda_hat": self.lambda_hat,
            "family": self.theta_hat.model.family,
            "theta_hat": self.theta_hat.to_dict(),
            "mode": self.mode.to_dict(),
            "margin": self.margin if math.isfinite(self.margin) else None,
            "margin_se": self.margin_se,
            "near_tie": self.near_tie,
            "draw": self.draw.diagnostics() if self.draw else None,
            "table": [c.to_dict() for c in self.table],
        }

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "p", "ell", "lambda", "soft_min", "weight_part",
                    "variance_part", "value", "se_log"])
        for c in self.table:
            w.writerow([c.family, c.p, c.ell, repr(c.lam), repr(c.soft_min_part),
                        repr(c.weight_part), repr(c.variance_part), repr(c.value),
                        repr(c.se_log)])
        return buf.getvalue()


def _order_key(c: CriterionValue) -> tuple:
    # ties: smaller p, then smaller ell, then smaller lambda, then catalog order
    return (c.value, c.p, c.ell, c.lam, c.model_index)


def criterion_table(catalog: ModelCatalog, series: TimeSeries,
                    mode: SelectionMode = SelectionMode(),
                    grid: str | Sequence[float] = "theoretical",
                    mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                    g_multipliers: Sequence[float] | None = None
                    ) -> tuple[list[CriterionValue], dict[str, dict]]:
    n = series.n
    rows: list[CriterionValue] = []
    grids: dict[str, dict] = {}
    m_p = catalog.m_p
    for idx, model in enumerate(catalog.models):
        g = resolve_grid(model, n, grid, g_multipliers)
        grids[model.key] = g.to_dict()
        # one prior sample per model, shared by every temperature
        risks = prior_risks(model, series, mc_samples, derive_seed(seed, "cell", idx))
        ests = [partition_from_risks(risks, lam, exact=isinstance(model, DiscreteModel))
                for lam in g.values]
        # grid values are sorted, so a running minimum makes the soft-min exactly
        # monotone in lam (it only absorbs rounding-level inversions)
        softs = np.minimum.accumulate([e.soft_min for e in ests])
        for lam, est, soft in zip(g.values, ests, softs):
            extra = dict(soft_min_part=float(soft), se_log=est.se_log, model_index=idx,
                         degenerate=g.degenerate)
            if mode.kind == "theoretical":
                rows.append(criterion_theoretical(model, lam, est.log_z, n, m_p[model.p], **extra))
            else:
                rows.append(criterion_practical(model, lam, est.log_z, n, mode.K, **extra))
    return rows, grids


def select(catalog: ModelCatalog, series: TimeSeries, mode: SelectionMode = SelectionMode(),
           mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
           grid: str | Sequence[float] = "theoretical",
           g_multipliers: Sequence[float] | None = None,
           max_proposals: int = DEFAULT_MAX_PROPOSALS) -> SelectionResult:
    """Pick ``(p, ell, lam)`` minimising the criterion and draw ``theta_hat`` there."""
    if not catalog.models:
        raise ValueError("catalog is empty")
    rows, grids = criterion_table(catalog, series, mode, grid, mc_samples, seed, g_multipliers)
    ordered = sorted(rows, key=_order_key)
    best = ordered[0]
    margin, margin_se = math.inf, 0.0
    if len(ordered) > 1:
        second = ordered[1]
        margin = second.value - best.value
        margin_se = math.hypot(best.se_log / best.lam, second.se_log / second.lam)
    model = catalog.models[best.model_index]
    draw = sample_gibbs(model, series, best.lam, derive_seed(seed, "draw"),
                        max_proposals=max_proposals)
    return SelectionResult(best.p, best.ell, best.lam, draw.theta, tuple(rows), mode, draw,
                           margin, margin_se, grids)
