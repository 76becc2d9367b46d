"""Repeated train/select/evaluate experiments and their reports."""

from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .baseline import aic_select
from .gibbs import DEFAULT_MAX_PROPOSALS, DEFAULT_MC_SAMPLES
from .predictors import ModelCatalog, fourier_catalog, linear_catalog, neural_catalog
from .risk import holdout_errors
from .rng import derive_seed
from .selection import SCHEMA_VERSION, SelectionMode, select
from .series_gen import InnovationSpec, ProcessSpec, simulate

STUDY_COEFFS = (0.2, 0.3, 0.2)
METHODS = ("gibbs", "aic")
REPORT_COLUMNS = ("rep", "method", "err1", "err2", "p_hat", "lambda_hat", "seed")


@dataclass(frozen=True)
class CatalogDescriptor:
    family: str = "linear"
    p_max: int = 8
    ell_max: int = 1
    radius: float = 1.0
    lip_cap: float | None = None
    lip_of_risk: float = 1.0

    def build(self, n: int) -> ModelCatalog:
        if self.family == "linear":
            return linear_catalog(self.p_max, n, self.radius, self.lip_cap, self.lip_of_risk)
        if self.family == "neural":
            return neural_catalog(self.p_max, self.ell_max, n, self.radius, self.lip_of_risk)
        if self.family == "fourier":
            cap = self.lip_cap if self.lip_cap is not None else self.radius
            return fourier_catalog(self.p_max, self.ell_max, n, cap, self.lip_of_risk)
        raise ValueError(f"unknown predictor family {self.family!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    process: ProcessSpec
    n_train: int = 500
    n_eval: int = 500
    skip: int = 8
    catalog: CatalogDescriptor = field(default_factory=CatalogDescriptor)
    grid: str = "fixed"
    mode: str = "practical"
    K: float = 0.1
    mc_samples: int = DEFAULT_MC_SAMPLES
    repetitions: int = 20
    master_seed: int = 0
    burn_in: int | None = None
    max_proposals: int = DEFAULT_MAX_PROPOSALS
    label: str = ""

    def validate(self) -> None:
        p_max = self.catalog.p_max
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.n_train < 2 * p_max:
            raise ValueError(f"n_train={self.n_train} must be >= 2 * max p = {2 * p_max}")
        if self.n_train <= 2 * (p_max + 1):
            raise ValueError(f"n_train={self.n_train} too short for the AIC baseline "
                             f"(needs > {2 * (p_max + 1)})")
        if self.skip < p_max:
            raise ValueError(f"skip={self.skip} must be >= max p = {p_max}")
        if self.n_eval <= self.skip:
            raise ValueError(f"n_eval={self.n_eval} must exceed skip={self.skip}")
        if self.grid not in ("fixed", "theoretical"):
            raise ValueError(f"unknown grid preset {self.grid!r}")
        SelectionMode(self.mode, self.K if self.mode == "practical" else None)
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")

    @property
    def selection_mode(self) -> SelectionMode:
        return SelectionMode(self.mode, self.K if self.mode == "practical" else None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "process": self.process.to_dict(),
            "n_train": self.n_train, "n_eval": self.n_eval, "skip": self.skip,
            "catalog": asdict(self.catalog),
            "grid": self.grid, "mode": self.mode, "K": self.K,
            "mc_samples": self.mc_samples, "repetitions": self.repetitions,
            "master_seed": self.master_seed, "burn_in": self.burn_in,
            "max_proposals": self.max_proposals,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        d.pop("schema_version", None)
        d["process"] = ProcessSpec.from_dict(d["process"])
        if "catalog" in d:
            d["catalog"] = CatalogDescriptor(**d["catalog"])
        return cls(**d)


def study_config(innovation: InnovationSpec, label: str = "", **overrides) -> ExperimentConfig:
    """The AR(3) simulation-study setup for one innovation law."""
    cfg = ExperimentConfig(process=ProcessSpec.ar(STUDY_COEFFS, innovation), label=label)
    return replace(cfg, **overrides) if overrides else cfg


def table1_configs(**overrides) -> list[ExperimentConfig]:
    """Gaussian sigma in {1, sqrt 3, 3} and the Dirac/exponential mixtures."""
    return [
        study_config(InnovationSpec.gaussian(1.0), "N(0,1)", **overrides),
        study_config(InnovationSpec.gaussian(math.sqrt(3.0)), "N(0,3) sigma=sqrt(3)", **overrides),
        study_config(InnovationSpec.gaussian(3.0), "N(0,3) sigma=3", **overrides),
        study_config(InnovationSpec.mixture_dirac_exp(1.0), "(d0+E(1))/2", **overrides),
        study_config(InnovationSpec.mixture_dirac_exp(1.0 / math.sqrt(12.0)),
                     "(d0+E(1/sqrt12))/2", **overrides),
    ]


def summarize(values: list[float]) -> dict[str, float]:
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"median": statistics.median(values), "mean": statistics.fmean(values), "sd": sd}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[dict[str, Any]]
    series: dict[int, dict[str, list[float]]] = field(default_factory=dict)

    def values(self, method: str, metric: str) -> list[float]:
        return [r[metric] for r in self.rows if r["method"] == method]

    @property
    def summary(self) -> dict[str, dict[str, dict[str, float]]]:
        return {m: {metric: summarize(self.values(m, metric)) for metric in ("err1", "err2")}
                for m in METHODS}

    def median(self, method: str, metric: str) -> float:
        return statistics.median(self.values(method, metric))

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, "config": self.config.to_dict(),
                "rows": self.rows, "summary": self.summary}

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([r["rep"], r["method"], repr(r["err1"]), repr(r["err2"]), r["p_hat"],
                        "" if r["lambda_hat"] is None else repr(r["lambda_hat"]), r["seed"]])
        return buf.getvalue()


def run_repetition(config: ExperimentConfig, rep: int,
                   keep_series: bool = False) -> tuple[list[dict[str, Any]], dict | None]:
    seed = derive_seed(config.master_seed, rep)
    train = simulate(config.process, config.n_train, config.burn_in,
                     derive_seed(config.master_seed, rep, "train"))
    evals = simulate(config.process, config.n_eval, config.burn_in,
                     derive_seed(config.master_seed, rep, "eval"))
    catalog = config.catalog.build(config.n_train)
    sel = select(catalog, train, config.selection_mode, config.mc_samples,
                 derive_seed(config.master_seed, rep, "select"), grid=config.grid,
                 max_proposals=config.max_proposals)
    fit = aic_select(train, config.catalog.p_max)
    g = holdout_errors(sel.theta_hat, evals, config.skip)
    a = holdout_errors(fit.param_point(), evals, config.skip)
    rows = [
        {"rep": rep, "method": "gibbs", "err1": g.err1, "err2": g.err2,
         "p_hat": sel.p_hat, "lambda_hat": sel.lambda_hat, "seed": seed},
        {"rep": rep, "method": "aic", "err1": a.err1, "err2": a.err2,
         "p_hat": fit.p_aic, "lambda_hat": None, "seed": seed},
    ]
    kept = None
    if keep_series:
        kept = {"train": train.values.tolist(), "eval": evals.values.tolist()}
    return rows, kept


def _run_rep_args(args):
    return run_repetition(*args)


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   keep_series: bool = False) -> ExperimentReport:
    """Simulate, select, fit the AIC baseline and score both on fresh data, per repetition.

    Output depends only on the config (including ``master_seed``), not on ``workers``.
    """
    config.validate()
    jobs = [(config, rep, keep_series) for rep in range(config.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_rep_args, jobs))
    else:
        results = [_run_rep_args(j) for j in jobs]
    rows: list[dict[str, Any]] = []
    series: dict[int, dict[str, list[float]]] = {}
    for rep, (rep_rows, kept) in enumerate(results):
        rows.extend(rep_rows)
        if kept is not None:
            series[rep] = kept
    return ExperimentReport(config, rows, series)


def format_table1(reports: list[ExperimentReport]) -> str:
    """Median / mean / sd of err1 and err2 for both methods, one block per law."""
    head = f"{'xi_t':<24}{'':<8}{'err1(gibbs)':>13}{'err1(aic)':>13}{'err2(gibbs)':>13}{'err2(aic)':>13}"
    lines = [head, "-" * len(head)]
    for rep in reports:
        s = rep.summary
        for i, stat in enumerate(("median", "mean", "sd")):
            label = rep.config.label if i == 0 else ""
            lines.append(f"{label:<24}{stat:<8}"
                         f"{s['gibbs']['err1'][stat]:>13.3f}{s['aic']['err1'][stat]:>13.3f}"
                         f"{s['gibbs']['err2'][stat]:>13.3f}{s['aic']['err2'][stat]:>13.3f}")
        lines.append("-" * len(head))
    return "\n".join(lines) + "\n"
