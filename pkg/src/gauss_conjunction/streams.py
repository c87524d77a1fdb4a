"""Counter-based random streams keyed by (seed, lane, process index).

Replication ``r`` of a stream that needs ``dim`` variates per replication
owns Philox blocks ``[r * B, (r + 1) * B)`` with ``B = ceil(dim / 4)``, so
any range of replications can be generated independently, in any order, and
reproduce the same numbers bit for bit. Variates come from inverse CDFs so
every replication consumes a fixed number of raw words.
"""
from __future__ import annotations

import numpy as np
from scipy import special

NORMAL_LANE = 0
EXPONENTIAL_LANE = 1

_WORDS_PER_BLOCK = 4
_TWO_M53 = 2.0**-53


def stream_key(seed: int, lane: int, process_index: int) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.SeedSequence([int(seed), int(lane), int(process_index)]).generate_state(2, np.uint64)


def uniforms(seed: int, lane: int, process_index: int, rep_start: int, count: int, dim: int) -> np.ndarray:
    """Open-interval uniforms of shape (count, dim) for replications rep_start..rep_start+count-1."""
    if rep_start < 0 or count < 0 or dim < 1:
        raise ValueError("need rep_start >= 0, count >= 0, dim >= 1")
    blocks = -(-dim // _WORDS_PER_BLOCK)
    counter = np.zeros(4, dtype=np.uint64)
    counter[0] = rep_start * blocks
    bitgen = np.random.Philox(key=stream_key(seed, lane, process_index), counter=counter)
    raw = bitgen.random_raw(count * blocks * _WORDS_PER_BLOCK)
    raw = raw.reshape(count, blocks * _WORDS_PER_BLOCK)[:, :dim]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def normals(seed, process_index, rep_start, count, dim) -> np.ndarray:
    return special.ndtri(uniforms(seed, NORMAL_LANE, process_index, rep_start, count, dim))


def exponentials(seed, process_index, rep_start, count, dim) -> np.ndarray:
    return -np.log1p(-uniforms(seed, EXPONENTIAL_LANE, process_index, rep_start, count, dim))
