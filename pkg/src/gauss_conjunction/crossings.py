"""Grid surrogates for level crossings, conjunction up-crossings and excursion sets.

Conventions: a grid value equal to the level counts as above it. Cell k
(between points k and k+1) holds an up-crossing when x[k] < u <= x[k+1] and a
down-crossing when x[k] >= u > x[k+1]. Other processes are judged at the
linearly interpolated crossing time, not at the cell endpoints.

These are the per-path reference implementations; the Monte Carlo engine
uses a compiled batch version that is tested against them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import PathSample


@dataclass(frozen=True)
class CrossingCounts:
    up: tuple
    down: tuple
    conj_up: tuple
    simultaneous_cells: int

    @property
    def conj_up_total(self) -> int:
        """Boundary-touching count U*_u (crossings of distinct processes never coincide a.s.)."""
        return sum(self.conj_up)


def _values(paths) -> np.ndarray:
    v = paths.values if isinstance(paths, PathSample) else np.atleast_2d(np.asarray(paths, dtype=float))
    if v.size == 0:
        raise ValueError("empty paths")
    return v


def count_crossings(values, u: float) -> tuple[int, int]:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d sequence of length >= 2")
    above = x >= u
    up = int(np.count_nonzero(~above[:-1] & above[1:]))
    down = int(np.count_nonzero(above[:-1] & ~above[1:]))
    return up, down


def _interp_at_crossing(v: np.ndarray, i: int, cells: np.ndarray, u: float) -> np.ndarray:
    """Values of every process at the interpolated u-crossing of process i in each cell."""
    x0, x1 = v[i, cells], v[i, cells + 1]
    theta = (u - x0) / (x1 - x0)
    return v[:, cells] + theta * (v[:, cells + 1] - v[:, cells])


def count_conjunction_upcrossings(paths, u: float, i: int) -> int:
    v = _values(paths)
    if v.shape[1] < 2:
        raise ValueError("need at least 2 grid points")
    above = v[i] >= u
    cells = np.flatnonzero(~above[:-1] & above[1:])
    if cells.size == 0 or v.shape[0] == 1:
        return int(cells.size)
    at = _interp_at_crossing(v, i, cells, u)
    others = np.delete(at, i, axis=0)
    return int(np.count_nonzero(np.all(others >= u, axis=0)))


def conjunction_exceeds(paths, u: float) -> bool:
    """Whether some grid point has every process >= u."""
    return bool(np.any(np.all(_values(paths) >= u, axis=0)))


def conjunction_exceeds_interpolated(paths, u: float) -> bool:
    """Same event for the piecewise-linear interpolant of the paths.

    Inside a cell each process is above u on a sub-interval; the event holds
    when those sub-intervals share a point in some cell.
    """
    v = _values(paths)
    if conjunction_exceeds(v, u):
        return True
    if v.shape[1] < 2:
        return False
    x0, x1 = v[:, :-1], v[:, 1:]
    a0, a1 = x0 >= u, x1 >= u
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (u - x0) / (x1 - x0)
    lo = np.where(a0, 0.0, np.where(a1, theta, np.inf))
    hi = np.where(a1, 1.0, np.where(a0, theta, -np.inf))
    return bool(np.any(lo.max(axis=0) <= hi.min(axis=0)))


def euler_characteristic_1d(paths, u: float) -> int:
    """Number of maximal runs of grid points where every process is >= u."""
    inside = np.all(_values(paths) >= u, axis=0)
    return int(inside[0]) + int(np.count_nonzero(inside[1:] & ~inside[:-1]))


def simultaneous_crossing_cells(paths, u: float) -> int:
    v = _values(paths)
    if v.shape[0] < 2 or v.shape[1] < 2:
        return 0
    above = v >= u
    crossing = above[:, :-1] != above[:, 1:]
    return int(np.count_nonzero(crossing.sum(axis=0) >= 2))


def crossing_counts(paths, u: float) -> CrossingCounts:
    v = _values(paths)
    ups, downs = zip(*(count_crossings(row, u) for row in v))
    conj = tuple(count_conjunction_upcrossings(v, u, i) for i in range(v.shape[0]))
    return CrossingCounts(ups, downs, conj, simultaneous_crossing_cells(v, u))
