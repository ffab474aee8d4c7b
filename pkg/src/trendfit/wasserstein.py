"""L1/L2 Wasserstein distances between quantile functions, and their mean.

For univariate distributions the Lq Wasserstein distance is the Lq distance
between quantile functions, approximated here by midpoint quadrature on the
shared grid.  The pointwise average of quantile functions minimises the sum
of squared L2 distances (it is the Frechet mean), so averaging doubles as
the barycenter operation.
"""
from __future__ import annotations

import numpy as np

from .errors import GridMismatchError
from .grid import QuantileFunction


def _check_shared_grid(fs):
    grid = fs[0].grid
    for f in fs[1:]:
        if not grid.same_as(f.grid):
            raise GridMismatchError("quantile functions live on different grids")
    return grid


def wasserstein_dist(f: QuantileFunction, g: QuantileFunction, q: int = 2) -> float:
    """Quadrature Lq Wasserstein distance, q in {1, 2}.

    Uses the grid's quadrature weights exactly as defined (unnormalised), so
    on the uniform grid of order P two point masses one unit apart are at
    distance ((P-1)/P)^(1/q), not quite 1.
    """
    if q not in (1, 2):
        raise ValueError(f"q must be 1 or 2, got {q}")
    grid = _check_shared_grid([f, g])
    diff = np.abs(f.values - g.values)
    if q == 1:
        return float(np.dot(grid.quad_weights, diff))
    return float(np.sqrt(np.dot(grid.quad_weights, diff * diff)))


def wasserstein_mean(fs, weights=None) -> QuantileFunction:
    """Weighted pointwise average of quantile functions (the Frechet mean)."""
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one quantile function")
    grid = _check_shared_grid(fs)
    if weights is None:
        w = np.full(len(fs), 1.0 / len(fs))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(fs),) or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive, one per quantile function")
        w = w / w.sum()
    stacked = np.stack([f.values for f in fs])
    return QuantileFunction(grid, w @ stacked)
