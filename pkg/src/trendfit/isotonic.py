"""Weighted pool-adjacent-violators in both directions, plus tie pooling.

The solver is the stack-based merge variant of backaveraging: blocks are
merged while the running block mean violates the requested direction, which
yields the weighted least-squares monotone fit in a single O(n) pass.
Violation checks are exact float comparisons (merge only on strict
violation), so already-monotone input is returned unchanged.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import CoverageError

DIRECTIONS = ("nondecreasing", "nonincreasing")


@njit(cache=True, nogil=True)
def _pava_core(y, w, increasing, out, bvals, bwts, bcnts):
    # Merge loop on sign-flipped values; out may alias y (reads finish first).
    n = y.shape[0]
    sign = 1.0 if increasing else -1.0
    m = 0
    for i in range(n):
        v = sign * y[i]
        ww = w[i]
        c = 1
        while m > 0 and bvals[m - 1] > v:
            tw = bwts[m - 1] + ww
            v = (bvals[m - 1] * bwts[m - 1] + v * ww) / tw
            ww = tw
            c += bcnts[m - 1]
            m -= 1
        bvals[m] = v
        bwts[m] = ww
        bcnts[m] = c
        m += 1
    j = 0
    for b in range(m):
        v = sign * bvals[b]
        for _ in range(bcnts[b]):
            out[j] = v
            j += 1


def pava(values, weights=None, direction: str = "nondecreasing") -> np.ndarray:
    """Weighted least-squares monotone fit of a sequence.

    Returns the vector of fitted values (same length as the input), monotone
    in the requested direction, preserving the weighted mean of the input.
    The nonincreasing fit equals negate -> nondecreasing fit -> negate.
    """
    y = np.ascontiguousarray(values, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("need a nonempty 1-D value vector")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.ascontiguousarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("weights must match values in length")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    n = y.size
    out = np.empty(n)
    _pava_core(y, w, direction == "nondecreasing", out,
               np.empty(n), np.empty(n), np.empty(n, np.int64))
    return out


def pool_ties(levels, values, weights, n_levels: int):
    """Collapse same-level observations to their weighted mean.

    Returns (pooled_values, pooled_weights), each of length ``n_levels`` and
    indexed by level - 1, with pooled weight the sum of the member weights.
    Every level 1..n_levels must appear at least once.
    """
    lev = np.asarray(levels, dtype=np.int64)
    val = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (lev.shape == val.shape == w.shape) or lev.ndim != 1:
        raise ValueError("levels, values, weights must be 1-D and equally long")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if np.any(lev < 1) or np.any(lev > n_levels):
        raise ValueError(f"levels must lie in 1..{n_levels}")
    counts = np.bincount(lev - 1, minlength=n_levels)
    if np.any(counts == 0):
        missing = np.nonzero(counts == 0)[0] + 1
        raise CoverageError(f"no observation at level(s) {missing.tolist()}")
    pooled_w = np.bincount(lev - 1, weights=w, minlength=n_levels)
    pooled_v = np.bincount(lev - 1, weights=w * val, minlength=n_levels) / pooled_w
    return pooled_v, pooled_w
