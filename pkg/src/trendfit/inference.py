"""Significance testing: permutation tests, a smoothed small-sample variant,
step-down minP multiple-testing correction, and the KS / mutual-information
baselines.

The trend tests permute batch labels and refit, using the Wasserstein R^2 as
the test statistic with the add-one convention p = (1 + #{null >= obs}) /
(1 + n_perm).  The smoothed variant enumerates all distinct label
assignments except the identity and its reversal, enriches them with
per-batch bootstrap resamples, and reads an approximate p-value off a
Gaussian-kernel CDF fitted to the null statistics.  The omnibus baselines
(max pairwise Kolmogorov-Smirnov statistic, conditional mutual information)
test sample-level exchangeability, so their permutations reshuffle pooled
samples across batches.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import CoverageError, DegenerateDataError, UnsupportedError
from .fitting import (
    _r_squared_parts,
    _r2_from_objective,
    _solve_linear_matrix,
    _solve_trend_matrix,
    _stack_batches,
)
from .grid import _quantile_values

FITTERS = ("trends", "linear_trends")


@dataclass(eq=False)
class TestResult:
    """Outcome of one significance test on one feature."""

    statistic: float
    p_raw: float
    method: str
    null_samples: int
    p_adjusted: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_raw <= 1.0):
            raise ValueError(f"p_raw must lie in [0,1], got {self.p_raw}")
        if self.null_samples < 1:
            raise ValueError("null_samples must be at least 1")


# ---------------------------------------------------------------------------
# trend-model permutation tests
# ---------------------------------------------------------------------------

def _r2_statistic(qf, levels, weights, grid, fitter, covariates, tol, max_iter, denom=None):
    if denom is None:
        denom = _r_squared_parts(qf, weights, grid.quad_weights)
    if fitter == "trends":
        _, _, _, objective, _ = _solve_trend_matrix(qf, levels, weights, grid, tol,
                                                    max_iter, want_y=False)
    else:
        L = int(levels.max())
        t = np.arange(1, L + 1, dtype=float) if covariates is None else np.asarray(covariates, float)
        _, objective = _solve_linear_matrix(qf, levels, weights, t, grid, tol, max_iter)
    return _r2_from_objective(objective, denom)


def _check_fitter(fitter):
    if fitter not in FITTERS:
        raise ValueError(f"fitter must be one of {FITTERS}, got {fitter!r}")


def permutation_test(batches, fitter: str = "trends", n_perm: int = 1000,
                     rng_seed=None, grid=None, covariates=None,
                     tol: float = 1e-8, max_iter: int = 10000) -> TestResult:
    """Label-permutation test of a constant effect against a trending one.

    Permutations are drawn uniformly with replacement from the shuffles of
    the observed label multiset; identical seeds give identical p-values.
    """
    _check_fitter(fitter)
    if n_perm < 1:
        raise ValueError("n_perm must be at least 1")
    qf, levels, weights, grid = _stack_batches(batches, grid)
    if np.unique(levels).size < 2:
        raise DegenerateDataError("need at least two distinct levels to test")
    denom = _r_squared_parts(qf, weights, grid.quad_weights)
    obs = _r2_statistic(qf, levels, weights, grid, fitter, covariates, tol, max_iter, denom)
    rng = np.random.default_rng(rng_seed)
    exceed = 0
    for _ in range(n_perm):
        perm = rng.permutation(levels)
        r2 = _r2_statistic(qf, perm, weights, grid, fitter, covariates, tol, max_iter, denom)
        if r2 >= obs:
            exceed += 1
    p = (1 + exceed) / (1 + n_perm)
    return TestResult(statistic=obs, p_raw=p, method=fitter, null_samples=n_perm)


def _distinct_label_assignments(labels, cap):
    """All distinct orderings of the label multiset, lexicographic order."""
    a = np.sort(np.asarray(labels, dtype=np.int64))
    n = a.size
    out = [a.copy()]
    while True:
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return out
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = a[i + 1:][::-1]
        out.append(a.copy())
        if len(out) > cap:
            raise UnsupportedError(
                f"more than {cap} distinct label assignments; "
                "use the plain permutation test instead"
            )


def _silverman_bw(x):
    n = x.size
    if n < 2:
        return 0.0
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    a = sd if iqr == 0 else min(sd, iqr / 1.34)
    return 0.9 * a * n ** (-0.2)


def plugin_cdf_bandwidth(x) -> float:
    """Plug-in bandwidth for a Gaussian-kernel CDF estimate (Altman-Leger).

    Uses the AMISE-optimal form h = [rho_K / (n * R(f'))]^(1/3) for the
    Gaussian kernel (rho_K = 1/sqrt(pi), unit second moment), estimating the
    roughness R(f') = int f'(x)^2 dx from a Gaussian pilot density with
    Silverman bandwidth.  Degenerate estimates fall back to Silverman's rule,
    with a floor of 1e-6.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    floor = 1e-6
    if n < 2 or not np.all(np.isfinite(x)):
        return floor
    silverman = _silverman_bw(x)
    if np.std(x, ddof=1) == 0:
        return max(silverman, floor)
    y = x
    if n > 4000:
        # the pairwise roughness sum is O(n^2); an even subsample is plenty
        y = np.sort(x)[:: max(1, n // 4000)]
    g = _silverman_bw(y)
    if g <= 0:
        return max(silverman, floor)
    m = y.size
    t2 = ((y[:, None] - y[None, :]) / g) ** 2
    roughness = float(np.sum((0.5 - 0.25 * t2) * np.exp(-0.25 * t2)))
    roughness /= m * m * g ** 3 * 2.0 * math.sqrt(math.pi)
    if not np.isfinite(roughness) or roughness <= 0:
        return max(silverman, floor)
    h = (1.0 / (math.sqrt(math.pi) * n * roughness)) ** (1.0 / 3.0)
    if not np.isfinite(h):
        return max(silverman, floor)
    return max(h, floor)


def smoothed_permutation_test(batches, fitter: str = "trends", min_null: int = 1000,
                              rng_seed=None, grid=None, covariates=None,
                              estimator: str = "type7", tol: float = 1e-8,
                              max_iter: int = 10000,
                              max_enumeration: int = 100000) -> TestResult:
    """Fine-grained approximate p-values for small numbers of batches.

    Enumerates every distinct label assignment except the observed one and
    its level reversal (B - 2 of them); when that alone cannot reach
    ``min_null`` null statistics, each assignment is paired with
    K = ceil(min_null / (B - 2)) bootstrap resamples of every batch.  A
    Gaussian-kernel CDF with plug-in bandwidth smooths the null, and the
    p-value is its upper tail at the observed R^2 -- strictly inside (0, 1).
    Falls back to the plain permutation test when only the identity and
    reversal exist.
    """
    _check_fitter(fitter)
    qf, levels, weights, grid = _stack_batches(batches, grid)
    if np.unique(levels).size < 2:
        raise DegenerateDataError("need at least two distinct levels to test")
    assignments = _distinct_label_assignments(levels, max_enumeration)
    B = len(assignments)
    L = int(levels.max())
    reversal = L + 1 - levels
    kept = [a for a in assignments
            if not np.array_equal(a, levels) and not np.array_equal(a, reversal)]
    if B - 2 <= 0 or not kept:
        warnings.warn(
            "only the observed labels and their reversal exist; "
            "falling back to the plain permutation test",
            RuntimeWarning,
            stacklevel=2,
        )
        return permutation_test(batches, fitter=fitter, n_perm=max(min_null, 1),
                                rng_seed=rng_seed, grid=grid, covariates=covariates,
                                tol=tol, max_iter=max_iter)
    K = math.ceil(min_null / (B - 2))
    denom = _r_squared_parts(qf, weights, grid.quad_weights)
    obs = _r2_statistic(qf, levels, weights, grid, fitter, covariates, tol, max_iter, denom)
    rng = np.random.default_rng(rng_seed)
    samples = [b.samples for b in batches]
    nulls = np.empty(len(kept) * K)
    pos = 0
    for assign in kept:
        if K == 1:
            nulls[pos] = _r2_statistic(qf, assign, weights, grid, fitter,
                                       covariates, tol, max_iter, denom)
            pos += 1
            continue
        for _ in range(K):
            boot = np.empty_like(qf)
            for i, s in enumerate(samples):
                draw = s[rng.integers(0, s.size, s.size)]
                boot[i] = _quantile_values(draw, grid.probs, estimator)
                boot[i].sort()  # guard the rare unsorted interpolation ulp
            nulls[pos] = _r2_statistic(boot, assign, weights, grid, fitter,
                                       covariates, tol, max_iter, None)
            pos += 1
    h = plugin_cdf_bandwidth(nulls)
    p = float(np.mean(norm.sf((obs - nulls) / h)))
    p = min(max(p, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    return TestResult(statistic=obs, p_raw=p, method=fitter, null_samples=nulls.size)


# ---------------------------------------------------------------------------
# multiple-testing correction
# ---------------------------------------------------------------------------

def stepdown_minp(p_matrix, observed) -> np.ndarray:
    """Step-down minP adjustment from a shared permutation pass.

    ``p_matrix[j, b]`` must be the permutation p-value of feature j's b-th
    permuted statistic computed within its own row (add-one convention, the
    count including the entry itself), and ``observed[j]`` the feature's raw
    p-value from the same row.  Features are stepped down in order of
    ascending raw p (ties by position); adjusted values are monotone along
    that order and never below the raw p-values.
    """
    P = np.asarray(p_matrix, dtype=float)
    obs = np.asarray(observed, dtype=float)
    if P.ndim != 2:
        raise ValueError("p_matrix must be a rectangular features x permutations array")
    m, B = P.shape
    if obs.shape != (m,):
        raise ValueError("observed must hold one raw p-value per feature")
    order = np.argsort(obs, kind="stable")
    suffix_min = np.minimum.accumulate(P[order][::-1], axis=0)[::-1]
    counts = np.count_nonzero(suffix_min <= obs[order][:, None], axis=1)
    adj = (1.0 + counts) / (1.0 + B)
    adj = np.maximum.accumulate(adj)
    adj = np.maximum(adj, obs[order])
    out = np.empty(m)
    out[order] = np.minimum(adj, 1.0)
    return out


# ---------------------------------------------------------------------------
# omnibus baselines
# ---------------------------------------------------------------------------

def _ks_two_sample(a, b):
    """Two-sample KS statistic; both inputs must be sorted."""
    grid_pts = np.concatenate([a, b])
    ca = np.searchsorted(a, grid_pts, side="right") / a.size
    cb = np.searchsorted(b, grid_pts, side="right") / b.size
    return float(np.max(np.abs(ca - cb)))


def _max_pairwise_ks(level_samples):
    stat = 0.0
    L = len(level_samples)
    for i in range(L):
        for j in range(i + 1, L):
            d = _ks_two_sample(level_samples[i], level_samples[j])
            if d > stat:
                stat = d
    return stat


def _pooled_by_level(batches):
    levels = np.array([b.level for b in batches], dtype=np.int64)
    L = int(levels.max())
    counts = np.bincount(levels - 1, minlength=L)
    if np.any(counts == 0):
        missing = (np.nonzero(counts == 0)[0] + 1).tolist()
        raise CoverageError(f"no samples at level(s) {missing}")
    if L < 2:
        raise DegenerateDataError("need at least two levels")
    pooled = [np.concatenate([b.samples for b in batches if b.level == l + 1])
              for l in range(L)]
    return pooled


def _sample_label_permutation_p(pooled, statistic_fn, obs, n_perm, rng):
    sizes = np.array([p.size for p in pooled])
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    flat = np.concatenate(pooled)
    exceed = 0
    for _ in range(n_perm):
        shuffled = rng.permutation(flat)
        perm_levels = [np.sort(shuffled[bounds[l]:bounds[l + 1]]) for l in range(sizes.size)]
        if statistic_fn(perm_levels) >= obs:
            exceed += 1
    return (1 + exceed) / (1 + n_perm)


def ks_baseline(batches, n_perm: int = 1000, rng_seed=None) -> TestResult:
    """Max two-sample KS statistic over all level pairs, permutation p-value.

    The null is full distribution equality, so the permutation reshuffles
    individual samples across batches (the maximised statistic has no usable
    asymptotic null).
    """
    pooled = [np.sort(p) for p in _pooled_by_level(batches)]
    obs = _max_pairwise_ks(pooled)
    rng = np.random.default_rng(rng_seed)
    p = _sample_label_permutation_p(pooled, _max_pairwise_ks, obs, n_perm, rng)
    return TestResult(statistic=obs, p_raw=p, method="ks", null_samples=n_perm)


def _binned_gaussian_kde(samples, centers, dx, bw):
    idx = np.clip(np.rint((samples - centers[0]) / dx), 0, centers.size - 1).astype(np.int64)
    counts = np.bincount(idx, minlength=centers.size).astype(float)
    half = int(math.ceil(4.0 * bw / dx))
    u = np.arange(-half, half + 1) * dx / bw
    kernel = np.exp(-0.5 * u * u)
    dens = np.convolve(counts, kernel, mode="same")
    total = dens.sum() * dx
    return dens / total


def _mi_statistic(level_samples, centers, dx, bw_floor):
    L = len(level_samples)
    dens = np.empty((L, centers.size))
    for l, s in enumerate(level_samples):
        bw = max(_silverman_bw(s), bw_floor)
        dens[l] = _binned_gaussian_kde(s, centers, dx, bw)
    pbar = dens.mean(axis=0)
    mi = 0.0
    for l in range(L):
        mask = dens[l] > 0
        mi += np.sum(dens[l, mask] * np.log(dens[l, mask] / pbar[mask])) * dx
    return mi / L


def mi_baseline(batches, grid_points: int = 256, n_perm: int = 1000,
                rng_seed=None) -> TestResult:
    """Mutual information between level and value under a uniform level law.

    Batches are reweighed so each level contributes equally; each conditional
    density is a Gaussian KDE evaluated on a shared value grid (Silverman
    bandwidth per level, floored at 1e-3 of the pooled sample range).  The
    p-value permutes individual samples, as for the KS baseline.
    """
    pooled = _pooled_by_level(batches)
    flat = np.concatenate(pooled)
    lo, hi = float(flat.min()), float(flat.max())
    if hi == lo:
        # all values identical: conditionals coincide, nothing to test
        return TestResult(statistic=0.0, p_raw=1.0, method="mi", null_samples=n_perm)
    bw_floor = max(1e-3 * (hi - lo), 1e-12)
    pad = max(4.0 * _silverman_bw(flat), 4.0 * bw_floor)
    centers = np.linspace(lo - pad, hi + pad, grid_points)
    dx = centers[1] - centers[0]

    def stat(levels):
        return _mi_statistic(levels, centers, dx, bw_floor)

    obs = stat(pooled)
    rng = np.random.default_rng(rng_seed)
    p = _sample_label_permutation_p(pooled, stat, obs, n_perm, rng)
    return TestResult(statistic=obs, p_raw=p, method="mi", null_samples=n_perm)
