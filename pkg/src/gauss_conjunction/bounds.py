"""Closed-form bounds and approximations for the conjunction probability.

Every bound has the shape point_term + crossing_term: the probability that
all processes start above the level, plus the expected number of
boundary-entering up-crossings.

Parameter convention for stationary inputs: ``C_i`` enters only through
sqrt(C_i) = sqrt(Var X_i'), i.e. ``C_i`` is the derivative variance, not the
coefficient of t^2 in r(t) = 1 - C t^2 + ..., which is half of it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import QuadratureError
from .kernels import CorrelatedPair, ProcessSet
from .scalar_stats import (DEFAULT_QUADRATURE, SQRT_2PI, QuadratureSpec, integrate_adaptive,
                           orthant_prob, phi, phi_bar)

SpeedFn = Union[float, Callable[[float], float]]


@dataclass
class BoundReport:
    u: float
    T: float
    n: int
    point_term: float
    crossing_term: float
    total: float
    method: str
    inputs_digest: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_level(u):
    if not (math.isfinite(u) and u > 0):
        raise ValueError(f"level u must be positive and finite, got {u}")


def _check_horizon(T):
    if not (math.isfinite(T) and T >= 0):
        raise ValueError(f"horizon T must be non-negative, got {T}")


def integrated_speed(s: Sequence[SpeedFn], T: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """sum_i int_0^T s_i(t) dt; constants take the exact T * s_i path."""
    total = 0.0
    for si in s:
        if callable(si):
            res = integrate_adaptive(lambda t: float(si(t)), 0.0, T, spec)
            if not res.converged:
                raise QuadratureError("integral of derivative standard deviation did not converge", res.error)
            total += res.value
        else:
            if not si > 0:
                raise ValueError(f"derivative standard deviations must be positive, got {si}")
            total += T * float(si)
    return total


def theorem1_bound(s: Sequence[SpeedFn], T: float, u: float,
                   spec: QuadratureSpec = DEFAULT_QUADRATURE) -> BoundReport:
    """Phi_bar^n(u) + Phi_bar^{n-1}(u) phi(u) / sqrt(2 pi) * int_0^T sum_i s_i(t) dt.

    ``s`` holds sqrt(Var X_i'(t)) for each process, as numbers (stationary) or callables.
    """
    _check_level(u)
    _check_horizon(T)
    n = len(s)
    if n < 1:
        raise ValueError("need at least one process")
    tail = phi_bar(u)
    speed = integrated_speed(s, T, spec) if T > 0 else 0.0
    point = tail**n
    crossing = tail ** (n - 1) * phi(u) / SQRT_2PI * speed
    return BoundReport(u, T, n, point, crossing, point + crossing, "theorem1",
                       {"integrated_speed": speed, "s": [si if not callable(si) else "callable" for si in s]})


def corollary1_bound(C: Sequence[float], T: float, u: float) -> BoundReport:
    _check_level(u)
    _check_horizon(T)
    C = _check_C(C)
    n = len(C)
    tail = phi_bar(u)
    point = tail**n
    crossing = tail ** (n - 1) * phi(u) * T / SQRT_2PI * sum(math.sqrt(c) for c in C)
    return BoundReport(u, T, n, point, crossing, point + crossing, "theorem1", {"C": list(C)})


def _check_C(C):
    C = [float(c) for c in C]
    if not C or not all(math.isfinite(c) and c > 0 for c in C):
        raise ValueError(f"C must be a nonempty list of positive numbers, got {C}")
    return C


def toeplitz_factor(C_i: float, u: float) -> np.ndarray:
    """Upper-triangular 2x2 Toeplitz matrix of one process."""
    tail = phi_bar(u)
    return np.array([[tail, math.sqrt(C_i) * phi(u) / math.sqrt(2.0)], [0.0, tail]])


def ec_heuristic(C: Sequence[float], T: float, u: float, order: Sequence[int] | None = None) -> BoundReport:
    """Expected Euler characteristic (1, 0) (prod_i R_i) (1, T / sqrt(pi))^t.

    The product is formed by explicit 2x2 multiplication in ``order``
    (default: as given). The two summands of the report are the diagonal and
    off-diagonal contributions of the product.
    """
    _check_level(u)
    _check_horizon(T)
    C = _check_C(C)
    order = range(len(C)) if order is None else order
    prod = np.eye(2)
    for i in order:
        prod = prod @ toeplitz_factor(C[i], u)
    point = float(prod[0, 0])
    crossing = float(prod[0, 1] * T / math.sqrt(math.pi))
    return BoundReport(u, T, len(C), point, crossing, point + crossing, "ec_matrix", {"C": list(C)})


def pickands_constant(C: Sequence[float]) -> float:
    """Closed form sum_i sqrt(C_i) / sqrt(2 pi) for the generalized Pickands constant."""
    return sum(math.sqrt(c) for c in _check_C(C)) / SQRT_2PI


def correlated_bound(u: float, rho: float, T: float, s: float,
                     spec: QuadratureSpec = DEFAULT_QUADRATURE) -> BoundReport:
    """Bound for X1 = X, X2 = rho X + sqrt(1 - rho^2) Y with X, Y i.i.d. stationary, s = sqrt(Var X'(0))."""
    _check_level(u)
    _check_horizon(T)
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (-1, 1), got {rho}")
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    k = math.sqrt((1.0 - rho) / (1.0 + rho))
    point = orthant_prob(u, rho, spec)
    crossing = 2.0 * T * phi(u) * s / SQRT_2PI * phi_bar(k * u)
    return BoundReport(u, T, 2, point, crossing, point + crossing, "correlated", {"rho": rho, "s": s})


def process_speeds(ps: ProcessSet) -> list:
    """sqrt(Var X_i'(t)) per process: floats for stationary kernels, callables otherwise."""
    out = []
    for k in ps.base_kernels[: ps.n]:
        if k.stationary:
            out.append(float(math.sqrt(k.deriv_variance(0.0))))
        else:
            out.append(lambda t, k=k: float(np.sqrt(k.deriv_variance(t))))
    return out


def bound_for(ps: ProcessSet, u: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> BoundReport:
    """The applicable closed-form bound for a process set."""
    dep = ps.dependence
    if isinstance(dep, CorrelatedPair):
        if not dep.base.stationary:
            raise ValueError("the correlated-pair bound needs a stationary base kernel")
        return correlated_bound(u, dep.rho, ps.T, float(math.sqrt(dep.base.deriv_variance(0.0))), spec)
    return theorem1_bound(process_speeds(ps), ps.T, u, spec)


def normalized_gap(bound_total: float, estimate: float, n: int, u: float) -> float:
    """(bound - estimate) / (Phi_bar^{n-1}(u) phi(u)), the error scaled by the crossing-term order."""
    return (bound_total - estimate) / (phi_bar(u) ** (n - 1) * phi(u))


def gap_scale(n: int, u: float) -> float:
    return phi_bar(u) ** (n - 1) * phi(u)
