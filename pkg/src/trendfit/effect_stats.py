"""Goodness-of-fit and effect-size statistics for trend fits.

``r_squared`` is one minus the ratio of the weighted sum of squared L2
Wasserstein residuals to the weighted sum of squared distances from the
Wasserstein mean of all batches -- the distribution-valued analogue of the
coefficient of determination.  ``delta_stat`` is the L1 Wasserstein distance
between the first and last fitted distributions divided by L, the analogue
of a regression slope over the whole ordinal progression.
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from .errors import GridMismatchError, UnsupportedError
from .fitting import TrendFit, _r2_from_objective, _stack_batches
from .wasserstein import wasserstein_dist


def r_squared(fit: TrendFit, batches) -> float:
    """Recompute the Wasserstein R^2 of a fit against its batches.

    Batches must be passed in the same order used for fitting.  All-identical
    batches (zero total variance) yield 1 by convention, with a warning.
    """
    qf, levels, weights, grid = _stack_batches(batches, fit.grid)
    if not np.array_equal(levels, fit.levels):
        raise ValueError("batch levels do not match the fit")
    fitted = fit.fitted_matrix()
    resid = qf - fitted[levels - 1]
    num = float(np.dot(weights, (resid * resid) @ grid.quad_weights))
    fbar = weights @ qf / weights.sum()
    dev = qf - fbar
    denom = float(np.dot(weights, (dev * dev) @ grid.quad_weights))
    return _r2_from_objective(num, denom)


def delta_stat(fit: TrendFit) -> float:
    """Expected Wasserstein change per level: d1(first, last fitted) / L."""
    first = fit.fitted[0]
    last = fit.fitted[-1]
    return wasserstein_dist(first, last, q=1) / fit.n_levels


def delta_emp(batches, grid=None) -> float:
    """Sum of adjacent-level L1 distances between empirical quantile functions.

    Defined only for one batch per level.
    """
    qf, levels, weights, grid = _stack_batches(batches, grid)
    L = int(levels.max())
    counts = np.bincount(levels - 1, minlength=L)
    if np.any(counts == 0):
        raise UnsupportedError("every level needs exactly one batch")
    if np.any(counts > 1):
        raise UnsupportedError("delta_emp is defined only when every level has one batch")
    order = np.argsort(levels)
    steps = np.abs(np.diff(qf[order], axis=0))
    return float(np.sum(steps @ grid.quad_weights))


def residual_table(fit: TrendFit) -> pd.DataFrame:
    """Long-format residuals: one row per (batch, grid probability).

    Columns: batch (input position), level, p, residual = observed quantile
    minus fitted quantile.  Suitable for residual-vs-level diagnostics.
    """
    n, P = fit.residuals.shape
    probs = fit.grid.probs
    return pd.DataFrame(
        {
            "batch": np.repeat(np.arange(n), P),
            "level": np.repeat(fit.levels, P),
            "p": np.tile(probs, n),
            "residual": fit.residuals.ravel(),
        }
    )
