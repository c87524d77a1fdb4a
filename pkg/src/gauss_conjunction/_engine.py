"""Compiled single-pass crossing statistics for a batch of replications.

Same conventions as ``crossings``; tests compare the two path by path.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def _interp_hit(vals, r, k, u):
    """Whether the interpolants of all processes are >= u at a common time in cell (k, k+1)."""
    lo = 0.0
    hi = 1.0
    for i in range(vals.shape[0]):
        x0 = vals[i, r, k]
        x1 = vals[i, r, k + 1]
        a0 = x0 >= u
        a1 = x1 >= u
        if a0 and a1:
            continue
        if not a0 and not a1:
            return False
        theta = (u - x0) / (x1 - x0)
        if a1:
            lo = max(lo, theta)
        else:
            hi = min(hi, theta)
    return lo <= hi


@nb.njit(cache=True, nogil=True)
def batch_stats(vals, us, up, down, conj, exceed, exceed_interp, start_in, sim, euler):
    n, c, g = vals.shape
    mpath = np.empty(g)
    # per-cell crossing counters, reset lazily by stamping
    stamp = np.full(max(g - 1, 1), -1, np.int64)
    ncell = np.zeros(max(g - 1, 1), np.int64)
    cur = 0
    for r in range(c):
        for k in range(g):
            m = vals[0, r, k]
            for i in range(1, n):
                m = min(m, vals[i, r, k])
            mpath[k] = m
        for q in range(us.size):
            u = us[q]
            runs = 0
            prev = False
            for k in range(g):
                inside = mpath[k] >= u
                if inside and not prev:
                    runs += 1
                prev = inside
            euler[q, r] = runs
            exceed[q, r] = runs > 0
            start_in[q, r] = mpath[0] >= u
            hit = runs > 0
            n_sim = 0
            cur += 1
            for i in range(n):
                a0 = vals[i, r, 0] >= u
                for k in range(1, g):
                    a1 = vals[i, r, k] >= u
                    if a1 == a0:
                        continue
                    a0 = a1
                    cell = k - 1
                    if stamp[cell] != cur:
                        stamp[cell] = cur
                        ncell[cell] = 1
                    else:
                        ncell[cell] += 1
                        if ncell[cell] == 2:
                            n_sim += 1
                    if not hit and _interp_hit(vals, r, cell, u):
                        hit = True
                    if not a1:
                        down[q, i, r] += 1
                        continue
                    up[q, i, r] += 1
                    x0 = vals[i, r, cell]
                    theta = (u - x0) / (vals[i, r, k] - x0)
                    ok = True
                    for j in range(n):
                        if j != i:
                            y0 = vals[j, r, cell]
                            if y0 + theta * (vals[j, r, k] - y0) < u:
                                ok = False
                                break
                    if ok:
                        conj[q, i, r] += 1
            sim[q, r] = n_sim
            exceed_interp[q, r] = hit


def run_batch(vals: np.ndarray, us: np.ndarray) -> dict:
    n, c, _ = vals.shape
    m = us.size
    out = {
        "up": np.zeros((m, n, c), np.int64),
        "down": np.zeros((m, n, c), np.int64),
        "conj": np.zeros((m, n, c), np.int64),
        "exceed": np.zeros((m, c), np.bool_),
        "exceed_interp": np.zeros((m, c), np.bool_),
        "start_in": np.zeros((m, c), np.bool_),
        "sim": np.zeros((m, c), np.int64),
        "euler": np.zeros((m, c), np.int64),
    }
    batch_stats(np.ascontiguousarray(vals), np.ascontiguousarray(us, dtype=np.float64),
                out["up"], out["down"], out["conj"], out["exceed"], out["exceed_interp"],
                out["start_in"], out["sim"], out["euler"])
    return out
