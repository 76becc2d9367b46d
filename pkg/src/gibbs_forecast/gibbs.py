"""Log-partition estimates and Gibbs-measure draws.

For a model with uniform prior ``pi`` and empirical risk ``r_n`` the Gibbs
measure at inverse temperature ``lam`` has density proportional to
``exp(-lam * r_n(theta))`` with respect to ``pi``.  ``log_partition`` estimates
``log pi[exp(-lam r_n)]`` from iid prior draws with a stabilised log-mean-exp;
``sample_gibbs`` draws from the Gibbs measure by rejection from the prior.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from .predictors import ModelSpec, ParamPoint, constraint_value, fourier_weights, sample_prior_array
from .risk import empirical_risk, empirical_risks
from .rng import make_rng
from .series_gen import TimeSeries

log = logging.getLogger(__name__)

DEFAULT_MC_SAMPLES = 10_000
DEFAULT_MAX_PROPOSALS = 200_000


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Uniform prior on a finite set of parameter atoms of ``base``.

    Used as an exactly solvable stand-in for a continuous model: the
    partition function is computed by enumeration and Gibbs draws can be
    checked against the exact atom weights.
    """

    base: ModelSpec
    atoms: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        atoms = np.atleast_2d(np.array(self.atoms, dtype=float))
        if atoms.shape[1] != self.base.q:
            raise ValueError(f"atoms must have {self.base.q} coordinates")
        for row in atoms:
            ParamPoint(self.base, row)
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    def __getattr__(self, name: str) -> Any:
        if name in ("family", "p", "ell", "q", "radius", "lip_cap", "d", "key",
                    "with_complexity"):
            return getattr(self.base, name)
        raise AttributeError(name)

    def to_dict(self) -> dict[str, Any]:
        return {**self.base.to_dict(), "atoms": self.atoms.tolist()}


@dataclass(frozen=True)
class PartitionEstimate:
    log_z: float
    lam: float
    mc_samples: int
    se_log: float
    r_min: float
    r_mean: float
    exact: bool = False
    excess: float = 0.0

    @property
    def soft_min(self) -> float:
        """``-log_z / lam``, computed as ``r_min`` plus a non-negative excess."""
        # Jensen brackets the exact value; clamp away rounding
        return min(self.r_min + self.excess, self.r_mean)


@dataclass(frozen=True)
class GibbsDraw:
    theta: ParamPoint
    lam: float
    risk: float
    accept_count: int
    proposal_count: int
    exhausted: bool = False

    def diagnostics(self) -> dict[str, Any]:
        return {"model": self.theta.model.key, "lambda": self.lam, "risk": self.risk,
                "accept_count": self.accept_count, "proposal_count": self.proposal_count,
                "acceptance_rate": self.accept_count / self.proposal_count,
                "exhausted": self.exhausted}


@dataclass(frozen=True)
class GaussianProposal:
    """Isotropic Gaussian proposal ``N(center, scale^2 I)`` truncated to the model."""

    center: tuple[float, ...]
    scale: float

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("Gaussian proposal scale must be > 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def _is_discrete(model: Any) -> bool:
    return isinstance(model, DiscreteModel)


def prior_risks(model: ModelSpec | DiscreteModel, series: TimeSeries,
                mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> np.ndarray:
    """Empirical risks of the prior draws behind :func:`log_partition`.

    For a :class:`DiscreteModel` these are the atom risks (exact enumeration).
    """
    if _is_discrete(model):
        return np.array([empirical_risk(ParamPoint(model.base, a), series).value
                         for a in model.atoms])
    if mc_samples < 2:
        raise ValueError("mc_samples must be >= 2")
    thetas = sample_prior_array(model, mc_samples, make_rng(seed, "partition", model.key))
    return empirical_risks(model, thetas, series)


def partition_from_risks(risks: np.ndarray, lam: float, exact: bool = False) -> PartitionEstimate:
    """Log-mean-exp of ``-lam * risks`` with a delta-method standard error."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    risks = np.asarray(risks, dtype=float)
    r_min = float(risks.min())
    gaps = risks - r_min
    # expm1/log1p keep full precision when every weight is close to 1 (small lam)
    wm1 = np.expm1(-lam * gaps)
    log_mean_w = math.log1p(float(np.mean(wm1)))
    w = wm1 + 1.0
    n = risks.size
    se = 0.0 if exact or n < 2 else float(np.std(w, ddof=1) / (math.sqrt(n) * np.mean(w)))
    return PartitionEstimate(-lam * r_min + log_mean_w, float(lam), n, se, r_min,
                             r_min + float(np.mean(gaps)), exact, max(-log_mean_w / lam, 0.0))


def soft_min_from_risks(risks: np.ndarray, lam: float) -> float:
    return partition_from_risks(risks, lam).soft_min


def soft_min_curve(risks: np.ndarray, lams: Sequence[float]) -> np.ndarray:
    """Soft-min at each temperature of ``lams`` on one fixed draw set.

    The exact curve is non-increasing in ``lam``; a running minimum over the
    sorted temperatures removes rounding-level inversions so the returned
    values are monotone exactly.
    """
    lams = np.asarray(lams, dtype=float)
    order = np.argsort(lams, kind="stable")
    vals = np.array([soft_min_from_risks(risks, lams[i]) for i in order])
    out = np.empty_like(vals)
    out[order] = np.minimum.accumulate(vals)
    return out


def log_partition(model: ModelSpec | DiscreteModel, series: TimeSeries, lam: float,
                  mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> PartitionEstimate:
    """Estimate ``log integral exp(-lam r_n) d pi`` for one model."""
    risks = prior_risks(model, series, mc_samples, seed)
    return partition_from_risks(risks, lam, exact=_is_discrete(model))


def soft_min(model: ModelSpec | DiscreteModel, series: TimeSeries, lam: float,
             mc_samples: int = DEFAULT_MC_SAMPLES, seed: int = 0) -> float:
    """``-(1/lam) log integral exp(-lam r_n) d pi``."""
    return log_partition(model, series, lam, mc_samples, seed).soft_min


class _ProposalStream:
    """Iid proposals with their risks and log acceptance offsets, in batches."""

    def __init__(self, model, series, rng, proposal, batch):
        self.model, self.series, self.rng = model, series, rng
        self.proposal, self.batch = proposal, batch
        if _is_discrete(model):
            self.atom_risks = prior_risks(model, series)
        elif proposal is not None:
            mu = np.asarray(proposal.center, dtype=float)
            if mu.size != model.q:
                raise ValueError(f"proposal center needs {model.q} coordinates")
            self.mu = mu
            self.far2 = _max_sq_distance(model, mu)

    def batches(self) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Yield ``(thetas, risks, log_ratio)`` where ``log_ratio <= 0`` is the
        proposal correction (zero for the uniform prior); rows outside the
        constraint set carry ``-inf``."""
        model, rng, b = self.model, self.rng, self.batch
        while True:
            if _is_discrete(model):
                idx = rng.integers(0, len(model.atoms), size=b)
                yield model.atoms[idx], self.atom_risks[idx], np.zeros(b)
            elif self.proposal is None:
                thetas = sample_prior_array(model, b, rng)
                yield thetas, empirical_risks(model, thetas, self.series), np.zeros(b)
            else:
                s = self.proposal.scale
                thetas = self.mu + s * rng.standard_normal((b, model.q))
                inside = constraint_value(model, thetas) <= model.radius
                d2 = np.sum((thetas - self.mu) ** 2, axis=1)
                log_ratio = np.where(inside, (d2 - self.far2) / (2 * s * s), -np.inf)
                risks = np.full(b, np.inf)
                if inside.any():
                    risks[inside] = empirical_risks(model, thetas[inside], self.series)
                yield thetas, risks, np.minimum(log_ratio, 0.0)


def _max_sq_distance(model: ModelSpec, mu: np.ndarray) -> float:
    """Upper bound on ``max ||theta - mu||^2`` over the constraint set."""
    r = model.radius
    if model.family == "fourier":
        semi = r / float(np.min(np.tile(fourier_weights(model.ell), model.p)))
        return (float(np.linalg.norm(mu)) + semi) ** 2
    # l1-ball: maximum of a convex function is attained at a vertex
    return float(mu @ mu) + r * r + 2.0 * r * float(np.max(np.abs(mu)))


class _GibbsSampler:
    def __init__(self, model, series, lam, rng, urng, max_proposals, pilot_size, proposal,
                 batch=None):
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        if max_proposals < 1:
            raise ValueError("max_proposals must be >= 1")
        if pilot_size is None:
            pilot_size = max(1, min(1000, max_proposals // 10))
        if max_proposals < pilot_size:
            raise ValueError(f"max_proposals={max_proposals} is smaller than the pilot "
                             f"batch ({pilot_size})")
        if batch is None:
            batch = 1024 if _is_discrete(model) else max(256, min(pilot_size, 4096))
        self.model, self.lam = model, float(lam)
        self.max_proposals, self.pilot_size = max_proposals, pilot_size
        self.base = model.base if _is_discrete(model) else model
        self.stream = _ProposalStream(model, series, rng, proposal, batch).batches()
        self.urng = urng
        self.buf: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self.pos = 0
        self.r_min = math.inf
        self.skip_pilot = lam == 0 and proposal is None

    def _take(self, k: int):
        if self.buf is None or self.pos >= len(self.buf[0]):
            self.buf, self.pos = next(self.stream), 0
        lo, hi = self.pos, min(self.pos + k, len(self.buf[0]))
        self.pos = hi
        return tuple(a[lo:hi] for a in self.buf)

    def draw(self) -> GibbsDraw:
        used = 0
        best_r, best_theta = math.inf, None
        if not self.skip_pilot:
            while used < self.pilot_size:
                thetas, risks, _ = self._take(self.pilot_size - used)
                used += len(risks)
                i = int(np.argmin(risks))
                if risks[i] < best_r:
                    best_r, best_theta = float(risks[i]), thetas[i]
            self.r_min = min(self.r_min, best_r)
        while used < self.max_proposals:
            thetas, risks, log_ratio = self._take(self.max_proposals - used)
            # running minimum seen before each proposal
            if self.lam == 0:
                log_acc = log_ratio.copy()
            else:
                prev = np.minimum.accumulate(np.r_[self.r_min, risks[:-1]])
                with np.errstate(invalid="ignore"):
                    log_acc = np.minimum(-self.lam * (risks - prev), 0.0) + log_ratio
            log_acc = np.where(np.isfinite(risks), log_acc, -np.inf)
            u = self.urng.random(len(risks))
            hits = np.flatnonzero(np.log(u) < log_acc)
            stop = int(hits[0]) + 1 if hits.size else len(risks)
            seen = risks[:stop]
            i = int(np.argmin(seen))
            if seen[i] < best_r:
                best_r, best_theta = float(seen[i]), thetas[i]
            self.r_min = min(self.r_min, float(seen.min()))
            # unread proposals go back to the buffer for the next draw
            self.pos -= len(risks) - stop
            used += stop
            if hits.size:
                j = hits[0]
                return GibbsDraw(ParamPoint(self.base, thetas[j]), self.lam, float(risks[j]),
                                 1, used)
        if best_theta is None:
            raise RuntimeError("no admissible proposal within max_proposals")
        return GibbsDraw(ParamPoint(self.base, best_theta), self.lam, best_r, 0, used,
                         exhausted=True)


def _make_sampler(model, series, lam, seed, max_proposals, pilot_size, proposal):
    return _GibbsSampler(model, series, lam, make_rng(seed, "gibbs", model.key),
                         make_rng(seed, "gibbs-accept", model.key),
                         max_proposals, pilot_size, proposal)


def sample_gibbs(model: ModelSpec | DiscreteModel, series: TimeSeries, lam: float, seed: int,
                 max_proposals: int = DEFAULT_MAX_PROPOSALS, pilot_size: int | None = None,
                 proposal: GaussianProposal | None = None) -> GibbsDraw:
    """Draw one parameter from the Gibbs measure ``pi{-lam r_n}``.

    Proposals come from the uniform prior (or from ``proposal``) and are
    accepted with probability ``exp(-lam (r_n(theta) - r_min))``, where
    ``r_min`` is the running minimum of the risks seen so far, starting from a
    pilot batch of ``min(1000, max_proposals // 10)`` proposals.  When the
    budget runs out the lowest-risk proposal is returned with
    ``exhausted=True``.  With ``lam = 0`` and the prior proposal the first
    proposal is returned.
    """
    sampler = _make_sampler(model, series, lam, seed, max_proposals, pilot_size, proposal)
    out = sampler.draw()
    if log.isEnabledFor(logging.DEBUG):
        log.debug(json.dumps({"event": "gibbs_draw", **out.diagnostics()}))
    return out


def sample_gibbs_many(model: ModelSpec | DiscreteModel, series: TimeSeries, lam: float,
                      count: int, seed: int, max_proposals: int = DEFAULT_MAX_PROPOSALS,
                      pilot_size: int | None = None,
                      proposal: GaussianProposal | None = None) -> list[GibbsDraw]:
    """``count`` successive draws from one sampler (pilot shared, stream continued)."""
    sampler = _make_sampler(model, series, lam, seed, max_proposals, pilot_size, proposal)
    draws = [sampler.draw()]
    sampler.skip_pilot = True
    draws.extend(sampler.draw() for _ in range(count - 1))
    return draws
