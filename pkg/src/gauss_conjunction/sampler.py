"""Exact finite-dimensional Gaussian path sampling on a uniform grid."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from . import streams
from .errors import CholeskyError
from .kernels import CorrelatedPair, Kernel, ProcessSet, cov_matrix

JITTER_START = 1e-12
JITTER_CAP = 1e-6
# pivoted factorization stops once every residual variance is below this
PIVOT_TOL = 1e-12
# BLAS results can differ in the last bit with the number of rows, so every
# replication is computed inside the aligned block of this many replications
SAMPLE_BLOCK = 64


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_k = k T / (n_points - 1) on [0, T]; one point means {0}."""

    T: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"grid horizon must be positive, got {self.T}")
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError(f"n_points must be a positive integer, got {self.n_points}")

    @property
    def points(self) -> np.ndarray:
        if self.n_points == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.T, self.n_points)

    @property
    def step(self) -> float:
        return self.T / (self.n_points - 1) if self.n_points > 1 else 0.0


@dataclass(frozen=True)
class FactorInfo:
    method: str
    rank: int
    jitter: float


@dataclass
class PathSample:
    values: np.ndarray  # (n_processes, n_points)
    grid: Grid
    seed: int
    rep_index: int

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.grid.n_points:
            raise ValueError("values do not match the grid")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, values, T: float = 1.0) -> "PathSample":
        """Wrap hand-written paths (rows = processes) on a uniform grid over [0, T]."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(values, Grid(T, values.shape[1]), seed=0, rep_index=0)


def chol_with_jitter(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``m + jitter * I``.

    Tries jitter 0, then 1e-12 increasing tenfold up to 1e-6. Returns the
    factor and the jitter that was needed.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.array_equal(m, m.T):
        raise ValueError("matrix must be square and exactly symmetric")
    eye = np.eye(m.shape[0])
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(m + jitter * eye), jitter
        except np.linalg.LinAlgError:
            pass
        if jitter >= JITTER_CAP:
            raise CholeskyError(
                f"Cholesky failed with jitter up to {JITTER_CAP:g}; kernel too degenerate for the grid", jitter)
        jitter = JITTER_START if jitter == 0.0 else min(jitter * 10.0, JITTER_CAP)


def pivoted_factor(m: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Rank-revealing Cholesky: F (n x rank) with F F^T = m up to residual variances <= tol.

    Smooth kernels on fine grids are numerically low rank, so this is both
    faster to sample from and closer to the target law than adding jitter.
    """
    m = np.asarray(m, dtype=float)
    c, piv, rank, info = lapack.dpstrf(m.copy(), lower=1, tol=tol)
    if info < 0:
        raise ValueError(f"dpstrf rejected argument {-info}")
    f = np.empty((m.shape[0], rank))
    f[piv - 1, :] = np.tril(c)[:, :rank]
    return f


@functools.lru_cache(maxsize=32)
def kernel_factor(kernel: Kernel, grid: Grid, method: str = "pivoted") -> tuple[np.ndarray, FactorInfo]:
    m = cov_matrix(kernel, grid.points)
    if method == "pivoted":
        f = pivoted_factor(m)
        return f, FactorInfo("pivoted", f.shape[1], 0.0)
    if method == "cholesky":
        f, jitter = chol_with_jitter(m)
        return f, FactorInfo("cholesky", f.shape[1], jitter)
    raise ValueError(f"unknown factor method {method!r}")


class PathSampler:
    """Draws replications of a ProcessSet on a grid.

    Factors are computed once per distinct kernel and shared read-only; the
    source process with index p draws from stream (seed, p).
    """

    def __init__(self, ps: ProcessSet, grid: Grid, method: str = "pivoted"):
        if not math.isclose(grid.T, ps.T, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"grid horizon {grid.T} differs from process horizon {ps.T}")
        self.ps = ps
        self.grid = grid
        self.method = method
        pairs = [kernel_factor(k, grid, method) for k in ps.base_kernels]
        self.factors = [f for f, _ in pairs]
        self.factor_info = [info for _, info in pairs]

    @property
    def n(self) -> int:
        return self.ps.n

    def sample_batch(self, seed: int, rep_start: int, count: int) -> np.ndarray:
        """Values of shape (n_processes, count, n_points)."""
        first = rep_start // SAMPLE_BLOCK * SAMPLE_BLOCK
        stop = -(-(rep_start + count) // SAMPLE_BLOCK) * SAMPLE_BLOCK
        full = np.empty((self.n, stop - first, self.grid.n_points))
        for p, f in enumerate(self.factors):
            z = streams.normals(seed, p, first, stop - first, f.shape[1])
            for b in range(0, stop - first, SAMPLE_BLOCK):
                np.matmul(z[b:b + SAMPLE_BLOCK], f.T, out=full[p, b:b + SAMPLE_BLOCK])
        out = full[:, rep_start - first:rep_start - first + count]
        dep = self.ps.dependence
        if isinstance(dep, CorrelatedPair):
            out[1] *= math.sqrt(1.0 - dep.rho**2)
            out[1] += dep.rho * out[0]
        return np.ascontiguousarray(out)

    def sample(self, seed: int, rep_index: int) -> PathSample:
        values = self.sample_batch(seed, rep_index, 1)[:, 0, :]
        return PathSample(values, self.grid, seed, rep_index)


def sample_paths(ps: ProcessSet, grid: Grid, seed: int, rep_index: int, method: str = "pivoted") -> PathSample:
    return PathSampler(ps, grid, method).sample(seed, rep_index)
