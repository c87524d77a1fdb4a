"""Standard normal density/tail, the bivariate orthant integral and quadrature.

All functions reject NaN and infinite inputs instead of propagating them.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError

SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
# integrands built from phi underflow well before this distance past the level
TAIL_TRUNCATION = 40.0


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not self.rel_tol >= 0:
            raise ValueError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValueError(f"max_subdivisions must be a positive integer, got {self.max_subdivisions}")


DEFAULT_QUADRATURE = QuadratureSpec()


class QuadResult(NamedTuple):
    value: float
    error: float
    converged: bool


def _finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def phi(x):
    """Standard normal density; accepts scalars or arrays."""
    x = _finite(x)
    return _unwrap(np.exp(-0.5 * x * x) / SQRT_2PI)


def phi_bar(x):
    """Upper tail P(Z >= x) of the standard normal.

    Evaluated as erfc(x / sqrt(2)) / 2, which keeps full relative accuracy far
    into the tail where 1 - Phi(x) would cancel to zero.
    """
    x = _finite(x)
    return _unwrap(0.5 * special.erfc(x / math.sqrt(2.0)))


def integrate_adaptive(f: Callable[[float], float], a: float, b: float,
                       spec: QuadratureSpec = DEFAULT_QUADRATURE,
                       points=None) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Never raises on budget exhaustion: the best value is returned with
    ``converged=False`` and the achieved error estimate.
    """
    a = float(_finite(a, "a"))
    b = float(_finite(b, "b"))
    if a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    if a == b:
        return QuadResult(0.0, 0.0, True)
    if points is not None:
        points = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, _info, *message = integrate.quad(
            f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=int(spec.max_subdivisions), points=points, full_output=1)
    # quad appends a message only when it did not reach the requested tolerance
    converged = not message and err <= max(spec.abs_tol, spec.rel_tol * abs(value))
    return QuadResult(float(value), float(err), bool(converged))


def orthant_prob(u: float, rho: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """P(X1 >= u, X2 >= u) for a standard bivariate normal pair with correlation rho.

    Computed as 2 * int_u^inf phi(x) * phi_bar(k x) dx with
    k = sqrt((1 - rho) / (1 + rho)); the upper limit is truncated at
    max(u, 0) + 40 where phi has underflowed.
    """
    u = float(_finite(u, "u"))
    rho = float(_finite(rho, "rho"))
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (-1, 1), got {rho}")
    k = math.sqrt((1.0 - rho) / (1.0 + rho))

    def integrand(x):
        return math.exp(-0.5 * x * x) / SQRT_2PI * 0.5 * math.erfc(k * x / _SQRT2)

    upper = max(u, 0.0) + TAIL_TRUNCATION
    res = integrate_adaptive(integrand, u, upper, spec, points=[0.0])
    if not res.converged:
        raise QuadratureError(
            f"orthant integral did not converge for u={u}, rho={rho}", res.error)
    return min(max(2.0 * res.value, 0.0), 1.0)
