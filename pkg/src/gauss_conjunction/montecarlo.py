"""Monte Carlo estimators built on exact grid sampling and crossing counts.

Replications are processed in fixed-size chunks keyed by replication index,
and every per-chunk statistic is an integer count, so results are identical
for any worker count and any completion order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from . import streams
from ._engine import run_batch
from .kernels import ProcessSet
from .sampler import Grid, PathSampler
from .scalar_stats import SQRT_2PI

CHUNK_REPS = 1024
PICKANDS_CHUNK_REPS = 1 << 18
MIN_REPS = 100
MIN_PICKANDS_REPS = 10_000
MAX_PICKANDS_SPACING = 0.2


def _z(level: float) -> float:
    return float(special.ndtri(0.5 + 0.5 * level))


def wilson_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if not 0 <= successes <= trials or trials < 1:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    z = _z(level)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


@dataclass
class McEstimate:
    quantity: str
    estimate: float
    stderr: float
    ci_low: float
    ci_high: float
    reps: int
    grid_points: int
    seed: int
    level: float = 0.95

    def to_dict(self) -> dict:
        return asdict(self)


def proportion_estimate(quantity, successes, reps, grid_points, seed, level=0.95) -> McEstimate:
    p = successes / reps
    low, high = wilson_ci(successes, reps, level)
    return McEstimate(quantity, p, math.sqrt(p * (1 - p) / reps), low, high, reps, grid_points, seed, level)


def mean_estimate(quantity, total, total_sq, reps, grid_points, seed, level=0.95) -> McEstimate:
    """Sample mean with normal-theory CI from exact integer sums."""
    total, total_sq = int(total), int(total_sq)
    mean = total / reps
    var = (reps * total_sq - total * total) / (reps * (reps - 1)) if reps > 1 else 0.0
    se = math.sqrt(max(var, 0.0) / reps)
    z = _z(level)
    return McEstimate(quantity, mean, se, mean - z * se, mean + z * se, reps, grid_points, seed, level)


def default_threads() -> int:
    return max(1, int(os.environ.get("GC_DEFAULT_THREADS", "1")))


def _map_chunks(fn, n_items, chunk, threads):
    starts = range(0, n_items, chunk)
    jobs = [(s, min(chunk, n_items - s)) for s in starts]
    if threads <= 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


# per-level integer tallies accumulated over chunks
_LEVEL_KEYS = ("exceed", "exceed_interp", "start_in", "identity_violations",
               "euler", "euler_sq", "sim", "sim_sq")
_PROCESS_KEYS = ("up", "up_sq", "up_fact", "up_fact_sq", "down", "down_sq", "conj", "conj_sq")


def _tally(stats: dict) -> dict:
    up = stats["up"]
    fact = up * (up - 1)
    conj = stats["conj"]
    conj_any = conj.sum(axis=1) > 0
    identity = stats["exceed_interp"] != (stats["start_in"] | conj_any)
    return {
        "exceed": stats["exceed"].sum(axis=1),
        "exceed_interp": stats["exceed_interp"].sum(axis=1),
        "start_in": stats["start_in"].sum(axis=1),
        "identity_violations": identity.sum(axis=1),
        "euler": stats["euler"].sum(axis=1),
        "euler_sq": (stats["euler"] ** 2).sum(axis=1),
        "sim": stats["sim"].sum(axis=1),
        "sim_sq": (stats["sim"] ** 2).sum(axis=1),
        "up": up.sum(axis=2),
        "up_sq": (up * up).sum(axis=2),
        "up_fact": fact.sum(axis=2),
        "up_fact_sq": (fact * fact).sum(axis=2),
        "down": stats["down"].sum(axis=2),
        "down_sq": (stats["down"] ** 2).sum(axis=2),
        "conj": conj.sum(axis=2),
        "conj_sq": (conj * conj).sum(axis=2),
    }


@dataclass
class Simulation:
    """Integer tallies of every crossing statistic at each level, one sampling pass."""

    ps: ProcessSet
    grid: Grid
    levels: tuple
    reps: int
    seed: int
    factor_info: list
    tallies: dict

    def _q(self, u) -> int:
        for q, level in enumerate(self.levels):
            if level == u:
                return q
        raise KeyError(f"level {u} was not simulated")

    def _prop(self, key, u, name):
        return proportion_estimate(name, int(self.tallies[key][self._q(u)]), self.reps,
                                   self.grid.n_points, self.seed)

    def _mean(self, key, u, name, i=None):
        q = self._q(u)
        s, s2 = self.tallies[key][q], self.tallies[key + "_sq"][q]
        if i is not None:
            s, s2 = s[i], s2[i]
        return mean_estimate(name, s, s2, self.reps, self.grid.n_points, self.seed)

    def conjunction(self, u) -> McEstimate:
        return self._prop("exceed", u, "conjunction_prob")

    def conjunction_interpolated(self, u) -> McEstimate:
        return self._prop("exceed_interp", u, "conjunction_prob_interpolated")

    def euler(self, u) -> McEstimate:
        return self._mean("euler", u, "euler_characteristic")

    def simultaneous(self, u) -> McEstimate:
        return self._mean("sim", u, "simultaneous_crossing_cells")

    def identity_violations(self, u) -> int:
        return int(self.tallies["identity_violations"][self._q(u)])

    def moments(self, u) -> list[dict]:
        q = self._q(u)
        rows = []
        for i in range(self.ps.n):
            rows.append({
                "mean_up": self._mean("up", u, "mean_up", i),
                "mean_up_factorial2": mean_estimate(
                    "mean_up_factorial2", self.tallies["up_fact"][q][i], self.tallies["up_fact_sq"][q][i],
                    self.reps, self.grid.n_points, self.seed),
                "mean_conj_up": self._mean("conj", u, "mean_conj_up", i),
                "mean_down": self._mean("down", u, "mean_down", i),
            })
        return rows


def simulate(ps: ProcessSet, levels, grid: Grid, reps: int, seed: int,
             threads: int | None = None, method: str = "pivoted") -> Simulation:
    """Sample ``reps`` replications once and tally crossing statistics at every level."""
    if reps < MIN_REPS:
        raise ValueError(f"reps must be >= {MIN_REPS}, got {reps}")
    levels = tuple(float(u) for u in np.atleast_1d(levels))
    us = np.array(levels, dtype=np.float64)
    if not np.all(np.isfinite(us)):
        raise ValueError("levels must be finite")
    sampler = PathSampler(ps, grid, method)
    threads = default_threads() if threads is None else max(1, int(threads))

    def chunk(start, count):
        return _tally(run_batch(sampler.sample_batch(seed, start, count), us))

    parts = _map_chunks(chunk, reps, CHUNK_REPS, threads)
    tallies = {k: sum(p[k] for p in parts) for k in _LEVEL_KEYS + _PROCESS_KEYS}
    return Simulation(ps, grid, levels, reps, seed, sampler.factor_info, tallies)


def estimate_conjunction_prob(ps, u, grid, reps, seed, threads=None) -> McEstimate:
    return simulate(ps, [u], grid, reps, seed, threads).conjunction(float(u))


def estimate_crossing_moments(ps, u, grid, reps, seed, threads=None) -> list[dict]:
    return simulate(ps, [u], grid, reps, seed, threads).moments(float(u))


def estimate_euler_char(ps, u, grid, reps, seed, threads=None) -> McEstimate:
    return simulate(ps, [u], grid, reps, seed, threads).euler(float(u))


# ---------------------------------------------------------------- Pickands

def pickands_candidates(C) -> dict:
    C = np.asarray(C, dtype=float)
    return {
        "paper_literal": float(np.sqrt(C).sum() / SQRT_2PI),
        "derivative_consistent": float(np.sqrt(2.0 * C).sum() / SQRT_2PI),
    }


def _verdict(h, se, candidates, nsigma=3.0) -> str:
    close = [name for name, value in candidates.items() if abs(h - value) < nsigma * se]
    return close[0] if len(close) == 1 else "inconclusive"


def pickands_successes(xi: np.ndarray, expo: np.ndarray, C, a: float) -> np.ndarray:
    """Success indicator of one replication of the lattice event {max_k Z(a k) <= 0}.

    Cov(B(t), B(s)) = ts has rank one, so B_i(t) = t xi_i exactly and
    f_i(t) = sqrt(2 C_i) t xi_i - C_i t^2 + E_i is a concave quadratic with
    f_i(0) = E_i > 0. Hence min_i f_i is positive exactly on [0, t_min), t_min
    the smallest of the positive roots, and the lattice points a, 2a, ...
    all satisfy min_i f_i <= 0 iff the first one does (K = ceil(t_min / a) <= 1).
    Evaluating f_i(a) avoids the cancellation in the root formula.
    """
    C = np.asarray(C, dtype=float)
    f_at_a = np.sqrt(2.0 * C) * a * xi - C * a * a + expo
    return np.any(f_at_a <= 0.0, axis=-1)


def _pickands_levels(C, spacings, reps, seed, threads):
    """Per replication, the number of spacings (sorted ascending) at which it succeeds."""
    C = np.asarray(C, dtype=float)
    n = C.size
    a_sorted = np.sort(np.asarray(spacings, dtype=float))

    def chunk(start, count):
        xi = np.column_stack([streams.normals(seed, i, start, count, 1)[:, 0] for i in range(n)])
        ex = np.column_stack([streams.exponentials(seed, i, start, count, 1)[:, 0] for i in range(n)])
        # success is monotone in a, so the success pattern is a count of levels
        k = np.zeros(count, np.int64)
        for a in a_sorted:
            k += pickands_successes(xi, ex, C, a)
        return np.bincount(k, minlength=a_sorted.size + 1)

    hist = sum(_map_chunks(chunk, reps, PICKANDS_CHUNK_REPS, threads))
    return a_sorted, hist


@dataclass
class PickandsEstimate:
    a: float
    reps: int
    seed: int
    h_hat: float
    stderr: float
    candidates: dict
    verdict: str

    def to_dict(self):
        return asdict(self)


@dataclass
class PickandsStudy:
    """Estimates at several spacings and their linear extrapolation to a = 0."""

    C: list
    reps: int
    seed: int
    estimates: list
    h_extrapolated: float
    stderr_extrapolated: float
    candidates: dict
    verdict: str
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["estimates"] = [e.to_dict() for e in self.estimates]
        return d


def _check_pickands_args(C, spacings, reps):
    C = np.asarray(C, dtype=float)
    if C.ndim != 1 or C.size < 1 or np.any(~np.isfinite(C)) or np.any(C <= 0):
        raise ValueError("C must be a nonempty list of positive numbers")
    for a in spacings:
        if not 0 < a <= MAX_PICKANDS_SPACING:
            raise ValueError(f"lattice spacing must lie in (0, {MAX_PICKANDS_SPACING}], got {a}")
    if reps < MIN_PICKANDS_REPS:
        raise ValueError(f"reps must be >= {MIN_PICKANDS_REPS}, got {reps}")


def estimate_pickands(C, a: float, reps: int, seed: int, threads=None) -> PickandsEstimate:
    """h_hat = P(max_{k>=1} Z(a k) <= 0) / a for a single lattice spacing."""
    _check_pickands_args(C, [a], reps)
    threads = default_threads() if threads is None else threads
    _, hist = _pickands_levels(C, [a], reps, seed, threads)
    p = hist[1] / reps
    h = p / a
    se = math.sqrt(p * (1 - p) / reps) / a
    cands = pickands_candidates(C)
    return PickandsEstimate(float(a), reps, seed, float(h), se, cands, _verdict(h, se, cands))


def extrapolate_pickands(C, spacings=(0.05, 0.02, 0.01), reps: int = 10_000_000, seed: int = 0,
                         threads=None) -> PickandsStudy:
    """Estimate h(a) at each spacing from common draws and extrapolate linearly to a = 0.

    The extrapolated value is a fixed linear combination sum_k w_k h(a_k), so
    its standard error comes from the per-replication values of
    sum_k w_k 1{success at a_k} / a_k.
    """
    spacings = list(spacings)
    _check_pickands_args(C, spacings, reps)
    if len(set(spacings)) < 2:
        raise ValueError("need at least two distinct spacings to extrapolate")
    threads = default_threads() if threads is None else threads
    a, hist = _pickands_levels(C, spacings, reps, seed, threads)
    m = a.size
    # success at level index j implies success at all larger spacings
    success_counts = np.array([hist[m - j:].sum() for j in range(m)])
    cands = pickands_candidates(C)
    estimates = []
    for j in range(m):
        p = success_counts[j] / reps
        h = p / a[j]
        se = math.sqrt(p * (1 - p) / reps) / a[j]
        estimates.append(PickandsEstimate(float(a[j]), reps, seed, float(h), float(se), cands,
                                           _verdict(h, se, cands)))
    design = np.column_stack([np.ones(m), a])
    w = np.linalg.pinv(design)[0]  # intercept weights of the least-squares line
    # value of sum_k w_k 1{success at a_k}/a_k for a replication succeeding at the top `top` spacings
    g = np.array([sum(w[j] / a[j] for j in range(m - top, m)) for top in range(m + 1)])
    mean = float((hist * g).sum() / reps)
    var = float((hist * (g - mean) ** 2).sum() / (reps - 1))
    se = math.sqrt(var / reps)
    return PickandsStudy([float(c) for c in np.atleast_1d(C)], reps, seed, estimates, mean, se, cands,
                         _verdict(mean, se, cands), {"weights": w.tolist(), "spacings": a.tolist()})
