"""Predictor families, their constraint sets and uniform priors.

Parameter layouts (``q`` is the ambient dimension):

* linear, ``q = p + 1``: ``(theta_0, theta_1, ..., theta_p)`` for
  ``theta_0 + sum_i theta_i x_i``; constraint ``||theta||_1 <= radius``.
* neural, ``q = ell * (p + 2) + 1``:
  ``(c_0, a_11..a_1p, b_1, c_1, ..., a_l1..a_lp, b_l, c_l)`` for
  ``c_0 + sum_i c_i sigmoid(a_i . x + b_i)``; constraint ``||theta||_1 <= radius``.
* fourier, ``q = p * ell``: ``theta[i, j]`` (row-major over lag ``i`` then basis
  index ``j``) for ``sum_ij theta_ij phi_j(x_i)``; constraint
  ``sum_ij theta_ij^2 w_j^2 <= radius^2`` with ``w_j = 2 floor(j / 2)`` and
  ``w_1 = 1`` for the constant basis function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from scipy.special import expit

FAMILIES = ("linear", "neural", "fourier")
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ModelSpec:
    """One sub-model: a family, a memory ``p`` and a size index ``ell``."""

    family: str
    p: int
    ell: int = 1
    radius: float = 1.0
    lip_cap: float = 1.0
    d: float | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown predictor family {self.family!r}")
        if self.p < 1 or self.ell < 1:
            raise ValueError("p and ell must be >= 1")
        if self.family == "linear" and self.ell != 1:
            raise ValueError("linear models have ell = 1")
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if not self.lip_cap > 0:
            raise ValueError("lip_cap must be > 0")
        if self.d is not None and self.d < 1:
            raise ValueError("complexity d must be >= 1")

    @property
    def q(self) -> int:
        if self.family == "linear":
            return self.p + 1
        if self.family == "neural":
            return self.ell * (self.p + 2) + 1
        return self.p * self.ell

    @property
    def key(self) -> str:
        return f"{self.family}:p={self.p}:ell={self.ell}"

    def with_complexity(self, d: float) -> "ModelSpec":
        return replace(self, d=float(d))

    def to_dict(self) -> dict[str, Any]:
        out = {"family": self.family, "p": self.p, "ell": self.ell,
               "radius": self.radius, "lip_cap": self.lip_cap}
        if self.d is not None:
            out["d"] = self.d
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelSpec":
        return cls(family=d["family"], p=int(d["p"]), ell=int(d.get("ell", 1)),
                   radius=float(d["radius"]), lip_cap=float(d.get("lip_cap", 1.0)),
                   d=d.get("d"))


def fourier_weights(ell: int) -> np.ndarray:
    """Ellipsoid axis weights ``w_j`` for ``j = 1..ell``."""
    j = np.arange(1, ell + 1)
    w = 2.0 * (j // 2)
    w[0] = 1.0
    return w


def fourier_basis(x: np.ndarray, ell: int) -> np.ndarray:
    """Evaluate ``phi_1..phi_ell`` at ``x``; output shape ``x.shape + (ell,)``.

    ``phi_1 = 1``, ``phi_{2k} = sqrt2 cos(2 pi k x)``, ``phi_{2k+1} = sqrt2 sin(2 pi k x)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (ell,))
    out[..., 0] = 1.0
    for j in range(2, ell + 1):
        k = j // 2
        arg = 2.0 * math.pi * k * x
        out[..., j - 1] = SQRT2 * (np.cos(arg) if j % 2 == 0 else np.sin(arg))
    return out


def constraint_value(model: ModelSpec, coords: np.ndarray) -> np.ndarray:
    """Norm-like quantity compared against ``radius`` (works on batches)."""
    coords = np.asarray(coords, dtype=float)
    if model.family == "fourier":
        w = np.tile(fourier_weights(model.ell), model.p)
        return np.sqrt(np.sum((coords * w) ** 2, axis=-1))
    return np.sum(np.abs(coords), axis=-1)


def in_constraint_set(model: ModelSpec, coords: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    return constraint_value(model, coords) <= model.radius + tol


@dataclass(frozen=True, eq=False)
class ParamPoint:
    """A parameter vector of one model, inside its constraint set."""

    model: ModelSpec
    coords: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if coords.size != self.model.q:
            raise ValueError(f"{self.model.key} expects {self.model.q} coordinates, "
                             f"got {coords.size}")
        if not in_constraint_set(self.model, coords):
            raise ValueError(f"parameter lies outside the constraint set of {self.model.key}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def to_dict(self) -> dict[str, Any]:
        return {"model": self.model.to_dict(), "coords": [float(c) for c in self.coords]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ParamPoint":
        return cls(ModelSpec.from_dict(d["model"]), np.asarray(d["coords"], dtype=float))


def lag_matrix(values: np.ndarray, p: int) -> np.ndarray:
    """Rows ``(X_{t-1}, ..., X_{t-p})`` for ``t = p+1..n`` (1-based)."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n <= p:
        raise ValueError(f"series of length {n} too short for memory p={p}")
    cols = [values[p - i: n - i] for i in range(1, p + 1)]
    return np.column_stack(cols)


def predict_batch(model: ModelSpec, thetas: np.ndarray, windows: np.ndarray) -> np.ndarray:
    """Predictions for every window and every parameter row.

    ``thetas`` has shape ``(m, q)``, ``windows`` shape ``(T, p)``; returns ``(T, m)``.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    p = model.p
    if windows.shape[1] != p:
        raise ValueError(f"window length {windows.shape[1]} does not match p={p}")
    if model.family == "linear":
        return thetas[:, :1].T + windows @ thetas[:, 1:].T
    if model.family == "fourier":
        feats = fourier_basis(np.clip(windows, -1.0, 1.0), model.ell).reshape(len(windows), -1)
        return feats @ thetas.T
    ell = model.ell
    c0 = thetas[:, 0]
    units = thetas[:, 1:].reshape(len(thetas), ell, p + 2)
    a, b, c = units[:, :, :p], units[:, :, p], units[:, :, p + 1]
    out = np.empty((len(windows), len(thetas)))
    out[:] = c0
    for u in range(ell):
        out += expit(windows @ a[:, u, :].T + b[:, u]) * c[:, u]
    return out


def predict(theta: ParamPoint, window: Sequence[float]) -> float:
    window = np.asarray(window, dtype=float).reshape(1, -1)
    if window.shape[1] != theta.model.p:
        raise ValueError(f"window length {window.shape[1]} does not match p={theta.model.p}")
    return float(predict_batch(theta.model, theta.coords[None, :], window)[0, 0])


def lipschitz_sum(theta: ParamPoint) -> float:
    """Upper bound on ``sum_j a_j(theta)`` in the per-lag Lipschitz condition."""
    model, c = theta.model, theta.coords
    if model.family == "linear":
        return math.fsum(abs(v) for v in c[1:])
    if model.family == "neural":
        units = c[1:].reshape(model.ell, model.p + 2)
        return math.fsum(abs(u[-1]) * float(np.sum(np.abs(u[:model.p]))) for u in units)
    j = np.arange(1, model.ell + 1)
    lip = 2.0 * SQRT2 * math.pi * (j // 2)
    return float(np.sum(np.abs(c.reshape(model.p, model.ell)) * lip))


def worst_case_lipschitz(model: ModelSpec) -> float:
    """Supremum of :func:`lipschitz_sum` over the whole constraint set."""
    r = model.radius
    if model.family == "linear":
        return r
    if model.family == "neural":
        # sum |c_i| ||a_i||_1 <= (sum |c_i|)(sum ||a_i||_1) <= (r / 2)^2
        return r * r / 4.0
    # Cauchy-Schwarz over the p * (ell - 1) non-constant terms; lip_j = sqrt2 pi w_j
    return SQRT2 * math.pi * r * math.sqrt(model.p * (model.ell - 1))


def fourier_radius_for_cap(lip_cap: float, p: int, ell: int) -> float:
    """Largest ellipsoid radius whose worst-case Lipschitz sum is ``lip_cap``."""
    if ell == 1:
        return lip_cap
    return lip_cap / (SQRT2 * math.pi * math.sqrt(p * (ell - 1)))


def sample_prior_array(model: ModelSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform draws from the constraint set, shape ``(count, q)``."""
    q = model.q
    if model.family == "fourier":
        g = rng.standard_normal((count, q))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radial = rng.random(count) ** (1.0 / q)
        w = np.tile(fourier_weights(model.ell), model.p)
        return g * (radial * model.radius)[:, None] / w
    # uniform on {y >= 0, sum y <= 1} from q + 1 exponential spacings, then signs
    e = rng.exponential(size=(count, q + 1))
    y = e[:, :q] / e.sum(axis=1, keepdims=True)
    signs = np.where(rng.random((count, q)) < 0.5, -1.0, 1.0)
    return model.radius * y * signs


def sample_prior(model: ModelSpec, count: int, seed: int) -> list[ParamPoint]:
    from .rng import make_rng

    if count < 1:
        raise ValueError("count must be >= 1")
    draws = sample_prior_array(model, count, make_rng(seed, "prior", model.key))
    return [ParamPoint(model, row) for row in draws]


def complexity_bound(model: ModelSpec, lip_of_risk: float, ref_norm: float = 0.0) -> float:
    """Complexity estimate for a uniform prior on an l1-ball.

    ``q * (1 + log(radius * max(C e / q, 1 / (radius - ref_norm))))`` floored at 1,
    where ``C`` is the Lipschitz constant of the risk in the parameter.
    """
    if lip_of_risk <= 0:
        raise ValueError("lip_of_risk must be > 0")
    if ref_norm < 0:
        raise ValueError("ref_norm must be >= 0")
    if ref_norm >= model.radius:
        raise ValueError("reference point on boundary; bound undefined")
    q, r = model.q, model.radius
    inner = max(lip_of_risk * math.e / q, 1.0 / (r - ref_norm))
    return max(1.0, q * (1.0 + math.log(r * inner)))


@dataclass(frozen=True)
class ModelCatalog:
    """Ordered collection of sub-models with their selection weights."""

    models: tuple[Any, ...]
    n: int

    def __post_init__(self) -> None:
        models = tuple(self.models)
        if not models:
            raise ValueError("catalog is empty")
        keys = [(m.family, m.p, m.ell) for m in models]
        if len(set(keys)) != len(keys):
            raise ValueError("catalog contains duplicate (family, p, ell) entries")
        half = self.n // 2
        for m in models:
            if m.p > half:
                raise ValueError(f"memory p={m.p} exceeds floor(n/2)={half}")
        object.__setattr__(self, "models", models)

    @property
    def m_p(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for m in self.models:
            counts[m.p] = counts.get(m.p, 0) + 1
        return counts

    def weight(self, model: Any) -> float:
        """``w_{p,ell} = 1 / (m_p * floor(n / 2))``."""
        return 1.0 / (self.m_p[model.p] * (self.n // 2))

    def check_lipschitz(self, tol: float = 1e-12) -> None:
        cap = math.log(self.n) - 1.0
        for m in self.models:
            base = getattr(m, "base", m)
            if base.lip_cap > cap + tol:
                raise ValueError(f"{base.key}: lip_cap {base.lip_cap:.4g} exceeds "
                                 f"log(n) - 1 = {cap:.4g}")
            worst = worst_case_lipschitz(base)
            if worst > base.lip_cap + tol:
                raise ValueError(f"{base.key}: worst-case Lipschitz sum {worst:.4g} exceeds "
                                 f"lip_cap {base.lip_cap:.4g}")

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelCatalog":
        return cls(tuple(ModelSpec.from_dict(m) for m in d["models"]), int(d["n"]))


def linear_catalog(p_max: int, n: int, radius: float = 1.0, lip_cap: float | None = None,
                   lip_of_risk: float = 1.0, check: bool = True) -> ModelCatalog:
    """Linear models ``p = 1..p_max`` on a common l1-ball, complexity filled in."""
    cap = radius if lip_cap is None else lip_cap
    models = tuple(
        ModelSpec("linear", p, 1, radius, cap).with_complexity(
            complexity_bound(ModelSpec("linear", p, 1, radius, cap), lip_of_risk))
        for p in range(1, p_max + 1)
    )
    catalog = ModelCatalog(models, n)
    if check:
        catalog.check_lipschitz()
    return catalog


def neural_catalog(p_max: int, ell_max: int, n: int, radius: float,
                   lip_of_risk: float = 1.0, check: bool = True) -> ModelCatalog:
    cap = max(radius * radius / 4.0, 1e-12)
    models = []
    for p in range(1, p_max + 1):
        for ell in range(1, ell_max + 1):
            m = ModelSpec("neural", p, ell, radius, cap)
            models.append(m.with_complexity(complexity_bound(m, lip_of_risk)))
    catalog = ModelCatalog(tuple(models), n)
    if check:
        catalog.check_lipschitz()
    return catalog


def fourier_catalog(p_max: int, ell_max: int, n: int, lip_cap: float,
                    lip_of_risk: float = 1.0, check: bool = True) -> ModelCatalog:
    models = []
    for p in range(1, p_max + 1):
        for ell in range(1, ell_max + 1):
            r = fourier_radius_for_cap(lip_cap, p, ell)
            m = ModelSpec("fourier", p, ell, r, lip_cap)
            models.append(m.with_complexity(complexity_bound(m, lip_of_risk)))
    catalog = ModelCatalog(tuple(models), n)
    if check:
        catalog.check_lipschitz()
    return catalog
