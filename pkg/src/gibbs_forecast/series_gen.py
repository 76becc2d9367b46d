"""Synthetic stationary series and analytic weak-dependence bounds.

Processes covered:

* ``ar``: ``X_t = c + sum_j a_j X_{t-j} + xi_t`` (causal, checked at construction)
* ``ma_truncated``: ``X_t = sum_{j=0}^J a_j xi_{t-j}``
* ``additive_ar``: ``X_t = f_1(X_{t-1}) + ... + f_p(X_{t-p}) + N(0, s^2)``, state
  clipped to ``[-1, 1]``
* ``doubling_map``: ``X_t = (X_{t-1} + xi_t) / 2`` with ``xi_t`` Bernoulli(1/2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from .rng import make_rng

INNOVATION_KINDS = ("gaussian", "mixture_dirac_exp", "bernoulli")
PROCESS_KINDS = ("ar", "ma_truncated", "additive_ar", "doubling_map")


class StationarityError(ValueError):
    """Raised when AR coefficients do not define a causal stationary process."""


@dataclass(frozen=True)
class InnovationSpec:
    """Law of the iid innovations ``xi_t``.

    ``gaussian``: N(0, sigma^2). ``mixture_dirac_exp``: (delta_0 + Exp(rate)) / 2,
    whose median is 0. ``bernoulli``: ``scale * B`` with ``B ~ Bernoulli(prob)``.
    """

    kind: str
    sigma: float | None = None
    rate: float | None = None
    prob: float | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in INNOVATION_KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.sigma is not None and self.sigma > 0):
            raise ValueError("gaussian innovation needs sigma > 0")
        if self.kind == "mixture_dirac_exp" and not (self.rate is not None and self.rate > 0):
            raise ValueError("mixture_dirac_exp innovation needs rate > 0")
        if self.kind == "bernoulli" and not (self.prob is not None and 0.0 <= self.prob <= 1.0):
            raise ValueError("bernoulli innovation needs prob in [0, 1]")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "InnovationSpec":
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def mixture_dirac_exp(cls, rate: float = 1.0) -> "InnovationSpec":
        return cls("mixture_dirac_exp", rate=float(rate))

    @classmethod
    def bernoulli(cls, prob: float = 0.5, scale: float = 1.0) -> "InnovationSpec":
        return cls("bernoulli", prob=float(prob), scale=float(scale))

    @property
    def mean_abs(self) -> float:
        """``E|xi|``, the l1 risk of the best predictor when the median is 0."""
        if self.kind == "gaussian":
            return self.sigma * math.sqrt(2.0 / math.pi)
        if self.kind == "mixture_dirac_exp":
            return 0.5 / self.rate
        return abs(self.scale) * self.prob

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        if self.kind == "mixture_dirac_exp":
            return {"kind": "mixture_dirac_exp", "rate": self.rate}
        return {"kind": "bernoulli", "prob": self.prob, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InnovationSpec":
        return cls(**d)


def _stationarity_check(coeffs: Sequence[float]) -> None:
    if not coeffs:
        return
    # roots of 1 - a_1 z - ... - a_p z^p; np.roots wants highest degree first
    poly = [-c for c in reversed(coeffs)] + [1.0]
    while len(poly) > 1 and poly[0] == 0.0:
        poly = poly[1:]
    if len(poly) == 1:
        return
    roots = np.roots(poly)
    moduli = np.abs(roots)
    worst = float(moduli.min())
    if worst <= 1.0 + 1e-9:
        raise StationarityError(
            f"AR characteristic polynomial has a root of modulus {worst:.6g} <= 1; "
            "coefficients do not define a stationary causal process"
        )


@dataclass(frozen=True)
class ProcessSpec:
    """Data-generating process.  Build with the classmethod constructors."""

    kind: str
    coeffs: tuple[float, ...] = ()
    intercept: float = 0.0
    innovation: InnovationSpec | None = None
    components: tuple[Any, ...] = ()
    noise_sigma: float | None = None
    _funcs: tuple[Callable[[float], float], ...] = field(
        default=(), repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.kind not in PROCESS_KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.kind in ("ar", "ma_truncated") and self.innovation is None:
            raise ValueError(f"{self.kind} process needs an innovation spec")
        if self.kind == "ar":
            _stationarity_check(self.coeffs)
        if self.kind == "ma_truncated" and not self.coeffs:
            raise ValueError("ma_truncated needs at least one coefficient")
        if self.kind == "additive_ar":
            if not self.components:
                raise ValueError("additive_ar needs at least one component")
            if not (self.noise_sigma is not None and self.noise_sigma > 0):
                raise ValueError("additive_ar needs noise_sigma > 0")
            object.__setattr__(
                self, "_funcs", tuple(_compile_component(c) for c in self.components)
            )

    @classmethod
    def ar(cls, coeffs: Sequence[float], innovation: InnovationSpec,
           intercept: float = 0.0) -> "ProcessSpec":
        return cls("ar", coeffs=tuple(coeffs), intercept=float(intercept),
                   innovation=innovation)

    @classmethod
    def ma_truncated(cls, coeffs: Sequence[float],
                     innovation: InnovationSpec) -> "ProcessSpec":
        return cls("ma_truncated", coeffs=tuple(coeffs), innovation=innovation)

    @classmethod
    def additive_ar(cls, components: Sequence[Any],
                    noise_sigma: float) -> "ProcessSpec":
        """``components`` are callables or expression strings in ``x``."""
        return cls("additive_ar", components=tuple(components),
                   noise_sigma=float(noise_sigma))

    @classmethod
    def doubling_map(cls) -> "ProcessSpec":
        return cls("doubling_map")

    @property
    def order(self) -> int:
        if self.kind == "ar":
            return len(self.coeffs)
        if self.kind == "additive_ar":
            return len(self.components)
        if self.kind == "ma_truncated":
            return len(self.coeffs) - 1
        return 1

    def default_burn_in(self) -> int:
        if self.kind == "ma_truncated":
            return max(len(self.coeffs) - 1, 10)
        return 10 * (self.order + 1)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "ar":
            return {"kind": "ar", "coeffs": list(self.coeffs),
                    "intercept": self.intercept,
                    "innovation": self.innovation.to_dict()}
        if self.kind == "ma_truncated":
            return {"kind": "ma_truncated", "coeffs": list(self.coeffs),
                    "innovation": self.innovation.to_dict()}
        if self.kind == "additive_ar":
            if not all(isinstance(c, str) for c in self.components):
                raise TypeError("only expression-string components serialize to JSON")
            return {"kind": "additive_ar", "components": list(self.components),
                    "noise_sigma": self.noise_sigma}
        return {"kind": "doubling_map"}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ProcessSpec":
        kind = d["kind"]
        if kind == "ar":
            return cls.ar(d.get("coeffs", []),
                          InnovationSpec.from_dict(d["innovation"]),
                          intercept=d.get("intercept", 0.0))
        if kind == "ma_truncated":
            return cls.ma_truncated(d["coeffs"], InnovationSpec.from_dict(d["innovation"]))
        if kind == "additive_ar":
            return cls.additive_ar(d["components"], d["noise_sigma"])
        if kind == "doubling_map":
            return cls.doubling_map()
        raise ValueError(f"unknown process kind {kind!r}")


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh",
                 "arctan", "sign", "pi", "minimum", "maximum", "clip")
}


def _compile_component(component: Any) -> Callable[[float], float]:
    if callable(component):
        return component
    if not isinstance(component, str):
        raise TypeError(f"component must be callable or an expression string, got {component!r}")
    code = compile(component, "<component>", "eval")
    for name in code.co_names:
        if name != "x" and name not in _EXPR_NAMESPACE:
            raise ValueError(f"name {name!r} not allowed in component expression {component!r}")

    def f(x: float, _code=code) -> float:
        return float(eval(_code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": x}))

    return f


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A finite real sample ``X_1..X_n`` with its provenance."""

    values: np.ndarray
    origin: dict[str, Any] | None = None
    seed: int | None = None
    burn_in: int = 0

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("time series values must be one-dimensional")
        if values.size < 4:
            raise ValueError(f"time series needs at least 4 observations, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("time series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DependenceBound:
    value: float
    method: str

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ValueError("dependence bound must be non-negative")


def sample_innovation(spec: InnovationSpec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` iid innovations from ``spec``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = make_rng(seed, "innovation")
    if spec.kind == "gaussian":
        return rng.normal(0.0, spec.sigma, size=count)
    if spec.kind == "mixture_dirac_exp":
        atom = rng.random(count) < 0.5
        expo = rng.exponential(1.0 / spec.rate, size=count)
        return np.where(atom, 0.0, expo)
    hits = rng.random(count) < spec.prob
    return np.where(hits, spec.scale, 0.0)


def simulate(spec: ProcessSpec, n: int, burn_in: int | None = None,
             seed: int = 0) -> TimeSeries:
    """Simulate ``n`` observations after ``burn_in`` discarded steps.

    The recursion starts from a zero state (uniform on [0, 1] for the
    doubling map).  Output is bitwise reproducible for a given seed.
    """
    if n < 4:
        raise ValueError("n must be >= 4")
    if burn_in is None:
        burn_in = spec.default_burn_in()
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    total = n + burn_in

    if spec.kind == "ar":
        xi = sample_innovation(spec.innovation, total, seed)
        drive = xi + spec.intercept if spec.intercept != 0.0 else xi
        if spec.coeffs:
            x = lfilter([1.0], np.r_[1.0, -np.asarray(spec.coeffs)], drive)
        else:
            x = drive
    elif spec.kind == "ma_truncated":
        xi = sample_innovation(spec.innovation, total, seed)
        x = lfilter(np.asarray(spec.coeffs), [1.0], xi)
    elif spec.kind == "additive_ar":
        noise = sample_innovation(InnovationSpec.gaussian(spec.noise_sigma), total, seed)
        funcs = spec._funcs
        x = np.zeros(total)
        for t in range(total):
            acc = noise[t]
            for i, f in enumerate(funcs, start=1):
                if t - i >= 0:
                    acc += f(x[t - i])
            x[t] = min(1.0, max(-1.0, acc))
    else:
        xi = sample_innovation(InnovationSpec.bernoulli(0.5, 1.0), total, seed)
        state = float(make_rng(seed, "doubling_init").random())
        x = np.empty(total)
        for t in range(total):
            state = 0.5 * (state + xi[t])
            x[t] = state

    values = np.array(x[burn_in:], dtype=float)
    return TimeSeries(values, origin=_describe(spec), seed=seed, burn_in=burn_in)


def _describe(spec: ProcessSpec) -> dict[str, Any]:
    try:
        return spec.to_dict()
    except TypeError:
        return {"kind": spec.kind, "components": [repr(c) for c in spec.components],
                "noise_sigma": spec.noise_sigma}


def wdp_bound_cbs(ma: ProcessSpec, xi_sup: float) -> DependenceBound:
    """Bound ``2 * ||xi||_inf * sum_j j |a_j|`` for a bounded linear Bernoulli shift."""
    if ma.kind != "ma_truncated":
        raise ValueError("wdp_bound_cbs needs an ma_truncated process")
    if xi_sup <= 0:
        raise ValueError("xi_sup must be > 0")
    a_tilde = math.fsum(j * abs(a) for j, a in enumerate(ma.coeffs))
    return DependenceBound(2.0 * xi_sup * a_tilde, "cbs")


def wdp_bound_phi_mixing(phi: Sequence[float], x_sup: float,
                         n: int | None = None) -> DependenceBound:
    """Bound ``2 * ||X||_inf * sum_{r=1}^n phi(r)``; ``phi[0]`` is ``phi(1)``."""
    if x_sup <= 0:
        raise ValueError("x_sup must be > 0")
    phi = [float(v) for v in phi]
    if any(v < 0 for v in phi):
        raise ValueError("phi-mixing coefficients must be non-negative")
    if n is not None:
        phi = phi[:n]
    return DependenceBound(2.0 * x_sup * math.fsum(phi), "phi_mixing")


def ar_stationary_variance(coeffs: Sequence[float], sigma2: float) -> float:
    """Stationary variance of a causal AR process via the Yule-Walker system."""
    p = len(coeffs)
    if p == 0:
        return sigma2
    a = np.asarray(coeffs, dtype=float)
    # unknowns gamma_0..gamma_p; gamma_k - sum_j a_j gamma_|k-j| = sigma2 * [k == 0]
    m = np.zeros((p + 1, p + 1))
    rhs = np.zeros(p + 1)
    rhs[0] = sigma2
    for k in range(p + 1):
        m[k, k] += 1.0
        for j in range(1, p + 1):
            m[k, abs(k - j)] -= a[j - 1]
    return float(np.linalg.solve(m, rhs)[0])
