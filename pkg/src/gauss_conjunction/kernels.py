"""Unit-variance covariance models and process sets.

Every kernel has r(t, t) = 1 and a closed-form derivative variance
Var(X'(t)) = d^2 r(s, t) / ds dt at s = t, which is what the bounds consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

# |r(s, t)| must stay below 1 - SEPARATION_EPS off the diagonal
SEPARATION_EPS = 1e-10


@dataclass(frozen=True)
class QuadraticWarp:
    """Time change tau(t) = t + beta * t**2, strictly increasing while beta > -1/(2T)."""

    beta: float = 0.0
    family: str = field(default="quadratic", init=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t + self.beta * t * t

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 + 2.0 * self.beta * t

    def check_horizon(self, T: float) -> None:
        if self.beta < 0 and not self.beta > -1.0 / (2.0 * T):
            raise ValueError(f"quadratic warp with beta={self.beta} is not increasing on [0, {T}]")


WARP_FAMILIES = {"quadratic": QuadraticWarp, "identity": lambda: QuadraticWarp(0.0)}


@dataclass(frozen=True)
class SquaredExponential:
    lengthscale: float = 1.0
    stationary = True

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)

    def correlation(self, s, t):
        d = np.asarray(s, dtype=float) - np.asarray(t, dtype=float)
        return np.exp(-0.5 * (d / self.lengthscale) ** 2)

    def deriv_variance(self, t):
        return np.full(np.shape(t), 1.0 / self.lengthscale**2)[()]

    def to_dict(self):
        return {"type": "se", "lengthscale": self.lengthscale}


@dataclass(frozen=True)
class Matern52:
    """Matern nu=5/2. Only C^4 at the diagonal, the edge of the sharpness hypotheses."""

    lengthscale: float = 1.0
    stationary = True

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)

    def correlation(self, s, t):
        x = math.sqrt(5.0) * np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float)) / self.lengthscale
        return (1.0 + x + x * x / 3.0) * np.exp(-x)

    def deriv_variance(self, t):
        return np.full(np.shape(t), 5.0 / (3.0 * self.lengthscale**2))[()]

    def to_dict(self):
        return {"type": "matern52", "lengthscale": self.lengthscale}


@dataclass(frozen=True)
class TimeWarpedSE:
    lengthscale: float = 1.0
    warp: QuadraticWarp = QuadraticWarp()
    stationary = False

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)

    def correlation(self, s, t):
        d = self.warp(s) - self.warp(t)
        return np.exp(-0.5 * (d / self.lengthscale) ** 2)

    def deriv_variance(self, t):
        return (self.warp.derivative(t) / self.lengthscale) ** 2

    def to_dict(self):
        return {"type": "time_warped_se", "lengthscale": self.lengthscale,
                "warp": {"family": self.warp.family, "beta": self.warp.beta}}


Kernel = Union[SquaredExponential, Matern52, TimeWarpedSE]


def _check_lengthscale(ell):
    if not (math.isfinite(ell) and ell > 0):
        raise ValueError(f"lengthscale must be a positive finite number, got {ell}")


def kernel_from_dict(d: dict) -> Kernel:
    kind = d.get("type")
    if kind == "se":
        return SquaredExponential(float(d["lengthscale"]))
    if kind == "matern52":
        return Matern52(float(d["lengthscale"]))
    if kind == "time_warped_se":
        w = dict(d.get("warp", {"family": "identity"}))
        family = w.pop("family")
        if family not in WARP_FAMILIES:
            raise ValueError(f"unknown warp family {family!r}")
        return TimeWarpedSE(float(d["lengthscale"]), WARP_FAMILIES[family](**w))
    raise ValueError(f"unknown kernel type {kind!r}")


def _check_times(T, *times):
    for x in times:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("times must be finite and non-negative")
        if T is not None and np.any(x > T):
            raise ValueError(f"times must lie in [0, {T}]")


def kernel_eval(k: Kernel, s, t, T: float | None = None):
    """Correlation r(s, t); with ``T`` given, times outside [0, T] are rejected."""
    _check_times(T, s, t)
    return k.correlation(s, t)


def deriv_variance(k: Kernel, t, T: float | None = None):
    _check_times(T, t)
    return k.deriv_variance(t)


def cov_matrix(k: Kernel, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size == 0:
        raise ValueError("grid must be a nonempty 1-d array of times")
    m = k.correlation(points[:, None], points[None, :])
    # symmetrize exactly; the formulas are symmetric up to rounding in the warp
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 1.0)
    return m


@dataclass
class KernelReport:
    kernel: dict
    T: float
    grid_n: int
    passed: bool
    max_offdiag_abs: float
    min_deriv_variance: float
    fitted_C: float | None
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kernel": self.kernel, "T": self.T, "grid_n": self.grid_n,
            "passed": self.passed, "max_offdiag_abs": self.max_offdiag_abs,
            "min_deriv_variance": self.min_deriv_variance, "fitted_C": self.fitted_C,
            "violations": [list(v) for v in self.violations],
        }


def fit_expansion_coefficient(k: Kernel, T: float) -> float:
    """Fit C in r(t) = 1 - C t^2 + O(t^4) from small lags.

    (1 - r(h)) / h^2 is regressed on h^2 over four lags and the intercept
    returned.
    """
    h = T * 1e-3 * np.arange(1, 5)
    y = (1.0 - k.correlation(h, 0.0)) / h**2
    slope, intercept = np.polyfit(h**2, y, 1)
    return float(intercept)


def validate_kernel(k: Kernel, T: float, grid_n: int = 101, max_violations: int = 20) -> KernelReport:
    """Check the sharpness hypotheses of a kernel on a grid over [0, T]."""
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"horizon must be positive (empty interior for T={T})")
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    if isinstance(k, TimeWarpedSE):
        k.warp.check_horizon(T)
    t = np.linspace(0.0, T, grid_n)
    r = np.abs(cov_matrix(k, t))
    off = ~np.eye(grid_n, dtype=bool)
    bad = np.argwhere(off & (r >= 1.0 - SEPARATION_EPS))
    bad = bad[bad[:, 0] < bad[:, 1]]
    violations = [(float(t[i]), float(t[j])) for i, j in bad[:max_violations]]
    dv = np.atleast_1d(k.deriv_variance(t))
    for i in np.flatnonzero(dv <= 0)[:max_violations]:
        violations.append((float(t[i]), float(t[i])))
    fitted = fit_expansion_coefficient(k, T) if k.stationary else None
    return KernelReport(
        kernel=k.to_dict(), T=float(T), grid_n=int(grid_n), passed=not violations,
        max_offdiag_abs=float(r[off].max()), min_deriv_variance=float(dv.min()),
        fitted_C=fitted, violations=violations)


@dataclass(frozen=True)
class Independent:
    kernels: tuple

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if len(self.kernels) < 1:
            raise ValueError("need at least one process")


@dataclass(frozen=True)
class CorrelatedPair:
    """X1 = X, X2 = rho X + sqrt(1 - rho^2) Y with X, Y independent copies of ``base``."""

    base: Kernel
    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class ProcessSet:
    T: float
    dependence: Independent | CorrelatedPair

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon T must be positive, got {self.T}")
        for k in self.base_kernels:
            if isinstance(k, TimeWarpedSE):
                k.warp.check_horizon(self.T)

    @classmethod
    def independent(cls, kernels, T: float) -> "ProcessSet":
        return cls(T, Independent(tuple(kernels)))

    @classmethod
    def correlated_pair(cls, base: Kernel, rho: float, T: float) -> "ProcessSet":
        return cls(T, CorrelatedPair(base, float(rho)))

    @property
    def n(self) -> int:
        if isinstance(self.dependence, CorrelatedPair):
            return 2
        return len(self.dependence.kernels)

    @property
    def base_kernels(self) -> tuple:
        """Kernels of the independent source processes that get sampled."""
        if isinstance(self.dependence, CorrelatedPair):
            return (self.dependence.base, self.dependence.base)
        return self.dependence.kernels

    @property
    def rho(self) -> float | None:
        return self.dependence.rho if isinstance(self.dependence, CorrelatedPair) else None

    def to_dict(self) -> dict:
        if isinstance(self.dependence, CorrelatedPair):
            return {"T": self.T, "correlated_pair": {"base": self.dependence.base.to_dict(),
                                                     "rho": self.dependence.rho}}
        return {"T": self.T, "independent": [k.to_dict() for k in self.dependence.kernels]}

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSet":
        T = float(d["T"])
        if "correlated_pair" in d:
            cp = d["correlated_pair"]
            return cls.correlated_pair(kernel_from_dict(cp["base"]), float(cp["rho"]), T)
        return cls.independent([kernel_from_dict(k) for k in d["independent"]], T)
