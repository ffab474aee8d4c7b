"""Quantile grids, quantile estimation, and quantile-function containers.

Every distribution in this package is represented by its values at a fixed
set of probabilities (a quantile function sampled on a grid).  The grid also
carries midpoint quadrature weights, so integrals over (0,1) reduce to
weighted sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, GridMismatchError, InvalidGridError

QUANTILE_ESTIMATORS = ("type7", "ecdf_inf")


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class QuantileGrid:
    """Probabilities p_1 < ... < p_{P-1} in (0,1) plus quadrature weights.

    The weight at p_k is (p_{k+1} - p_{k-1}) / 2, where the phantom endpoints
    are p_0 = 2 p_1 - p_2 and p_P = 2 p_{P-1} - p_{P-2}.  On the uniform grid
    p_k = k / P every weight equals 1 / P.  Weights are used exactly as
    defined (their sum is (P-1)/P on the uniform grid, not 1).
    """

    probs: np.ndarray
    quad_weights: np.ndarray

    def __post_init__(self):
        probs = _readonly(self.probs)
        weights = _readonly(self.quad_weights)
        if probs.ndim != 1 or probs.size < 2:
            raise InvalidGridError("grid needs at least two probabilities")
        if probs[0] <= 0.0 or probs[-1] >= 1.0 or np.any(np.diff(probs) <= 0):
            raise InvalidGridError("probabilities must be strictly increasing within (0,1)")
        if weights.shape != probs.shape or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise InvalidGridError("quadrature weights must be positive, one per probability")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "quad_weights", weights)

    @classmethod
    def from_probs(cls, probs) -> "QuantileGrid":
        """Build a grid from probabilities alone, deriving midpoint weights."""
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise InvalidGridError("grid needs at least two probabilities")
        padded = np.concatenate(([2 * p[0] - p[1]], p, [2 * p[-1] - p[-2]]))
        weights = (padded[2:] - padded[:-2]) / 2.0
        return cls(p, weights)

    @property
    def size(self) -> int:
        """Number of grid probabilities (P - 1 for the uniform grid of order P)."""
        return self.probs.size

    def same_as(self, other: "QuantileGrid") -> bool:
        return self is other or np.array_equal(self.probs, other.probs)


def default_grid(P: int) -> QuantileGrid:
    """Uniform grid {1/P, ..., (P-1)/P}; every quadrature weight is 1/P."""
    if P < 3:
        raise InvalidGridError(f"grid order must be at least 3, got {P}")
    probs = np.arange(1, P) / float(P)
    return QuantileGrid(probs, np.full(P - 1, 1.0 / P))


def validate_qf(values) -> bool:
    """True iff the vector is nondecreasing (exact comparison, no tolerance).

    Ties and flat runs are valid quantile functions; an empty vector is
    rejected outright.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("quantile-function values must be a nonempty 1-D vector")
    return bool(np.all(v[1:] >= v[:-1]))


@dataclass(frozen=True, eq=False)
class QuantileFunction:
    """A nondecreasing vector of quantile values on a grid."""

    grid: QuantileGrid
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        if values.shape != self.grid.probs.shape:
            raise GridMismatchError(
                f"expected {self.grid.size} values, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("quantile values must be finite")
        if not validate_qf(values):
            raise ValueError("quantile values must be nondecreasing")
        object.__setattr__(self, "values", values)


def _quantile_values(x, probs, method):
    if method == "type7":
        return np.quantile(x, probs)
    if method == "ecdf_inf":
        return np.quantile(x, probs, method="inverted_cdf")
    raise EstimationError(f"unknown quantile estimator {method!r}")


def estimate_quantiles(samples, grid: QuantileGrid, method: str = "type7") -> QuantileFunction:
    """Estimate the quantile function of a sample on a grid.

    ``type7`` linearly interpolates the order statistics at index
    h = (n-1)p + 1 (the default of R's ``quantile`` and ``numpy.quantile``).
    ``ecdf_inf`` returns inf{x : Fhat(x) >= p}, i.e. an order statistic.
    Both are nondecreasing in p by construction.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise EstimationError("need a nonempty 1-D sample vector")
    if not np.all(np.isfinite(x)):
        raise EstimationError("samples must be finite")
    return QuantileFunction(grid, _quantile_values(x, grid.probs, method))


@dataclass(frozen=True, eq=False)
class BatchObservation:
    """One batch: ordinal level, weight, raw samples, and its empirical quantiles."""

    level: int
    weight: float
    samples: np.ndarray
    empirical_qf: QuantileFunction

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"level must be a positive integer, got {self.level}")
        if not (self.weight > 0 and np.isfinite(self.weight)):
            raise ValueError(f"batch weight must be positive, got {self.weight}")
        samples = _readonly(self.samples)
        if samples.size == 0:
            raise ValueError("batch needs at least one sample")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_samples(cls, level, samples, grid, weight=1.0, estimator="type7"):
        qf = estimate_quantiles(samples, grid, estimator)
        return cls(int(level), float(weight), np.asarray(samples, dtype=float), qf)
