"""Synthetic data generators, trending fixtures, and evaluation metrics.

The S-family draws batches from negative binomial laws (size/prob
parameterisation: failures before ``r`` successes) whose per-batch
parameters are jittered by shared batch noise and clamped to stay valid,
then log10(x+1)-transformed.  The R-family adds a single Gaussian batch
offset to normal draws and is used for misspecification checks.  Noise-free
quantiles of the underlying laws are returned alongside the batches so
estimation error can be measured exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import nbinom, norm

from .fitting import follows_trend
from .grid import BatchObservation, QuantileFunction, default_grid
from .wasserstein import wasserstein_dist

S_MODELS = ("S1", "S2", "S3")
R_MODELS = ("R1", "R2", "R3")

_S_R = 5.0
_S1_P = (0.3, 0.3, 0.4, 0.5, 0.8)
_S2_COMPONENTS = ((5.0, 0.3), (5.0, 0.7))
_S2_LAMBDA = (0.1, 0.4, 0.8, 0.8, 0.8)
_S3_P = (0.5,) * 5
_R_MU = {
    "R1": (0.0,) * 7,
    "R2": (0.0, 0.1, 0.1, 0.2, 0.5, 0.9, 1.0),
    "R3": (0.0, 0.1, 0.3, 0.5, 0.4, 0.2, 0.0),
}
_R_CLAMP_MIN = 1.0
_P_CLAMP = (0.05, 0.95)


@dataclass(frozen=True)
class SimSpec:
    """One synthetic dataset: model, per-batch sample count, replication, noise."""

    model: str
    n: int
    n_per_level: int = 1
    sigma: float = 0.1
    rng_seed: object = None

    def __post_init__(self):
        if self.model not in S_MODELS + R_MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.n < 1 or self.n_per_level < 1:
            raise ValueError("n and n_per_level must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def L(self) -> int:
        return 5 if self.model in S_MODELS else 7


def _nb_level_quantiles(r, p, probs):
    return nbinom.ppf(probs, r, p)


def _nb_mixture_quantiles(lam, probs):
    (r1, p1), (r2, p2) = _S2_COMPONENTS
    hi = int(max(nbinom.ppf(1 - 1e-13, r1, p1), nbinom.ppf(1 - 1e-13, r2, p2))) + 2
    ks = np.arange(hi)
    cdf = (1 - lam) * nbinom.cdf(ks, r1, p1) + lam * nbinom.cdf(ks, r2, p2)
    return np.searchsorted(cdf, probs, side="left").astype(float)


def true_quantiles(model: str, grid=None):
    """Noise-free quantile functions of the underlying laws, one per level.

    S-model quantiles are computed from the exact negative binomial CDF and
    then log10(x+1)-transformed like the samples; R-model quantiles are
    normal.
    """
    if grid is None:
        grid = default_grid(100)
    probs = grid.probs
    out = []
    if model in S_MODELS:
        for level in range(5):
            if model == "S1":
                q = _nb_level_quantiles(_S_R, _S1_P[level], probs)
            elif model == "S3":
                q = _nb_level_quantiles(_S_R, _S3_P[level], probs)
            else:
                q = _nb_mixture_quantiles(_S2_LAMBDA[level], probs)
            out.append(QuantileFunction(grid, np.log10(q + 1.0)))
    else:
        for mu in _R_MU[model]:
            out.append(QuantileFunction(grid, mu + norm.ppf(probs)))
    return out


def _draw_s_batch(model, level, n, sigma, rng):
    r_noise = rng.normal(0.0, 10.0 * sigma)
    p_noise = rng.normal(0.0, sigma)
    if model == "S2":
        (r1, p1), (r2, p2) = _S2_COMPONENTS
        r1t = max(r1 + r_noise, _R_CLAMP_MIN)
        r2t = max(r2 + r_noise, _R_CLAMP_MIN)
        p1t = float(np.clip(p1 + p_noise, *_P_CLAMP))
        p2t = float(np.clip(p2 + p_noise, *_P_CLAMP))
        second = rng.random(n) < _S2_LAMBDA[level]
        x = np.empty(n)
        n2 = int(second.sum())
        x[second] = rng.negative_binomial(r2t, p2t, n2)
        x[~second] = rng.negative_binomial(r1t, p1t, n - n2)
    else:
        p = _S1_P[level] if model == "S1" else _S3_P[level]
        rt = max(_S_R + r_noise, _R_CLAMP_MIN)
        pt = float(np.clip(p + p_noise, *_P_CLAMP))
        x = rng.negative_binomial(rt, pt, n).astype(float)
    return np.log10(x + 1.0)


def generate(spec: SimSpec, grid=None, estimator: str = "type7"):
    """Draw one dataset: a list of batches plus the true per-level quantiles.

    Batches are generated level by level, replicate by replicate, from a
    single seeded stream, so identical specs give identical data.
    """
    if grid is None:
        grid = default_grid(100)
    rng = np.random.default_rng(spec.rng_seed)
    batches = []
    for level in range(spec.L):
        for _ in range(spec.n_per_level):
            if spec.model in S_MODELS:
                values = _draw_s_batch(spec.model, level, spec.n, spec.sigma, rng)
            else:
                z = rng.normal(0.0, spec.sigma)
                values = rng.normal(_R_MU[spec.model][level], 1.0, spec.n) + z
            batches.append(
                BatchObservation.from_samples(level + 1, values, grid, 1.0, estimator)
            )
    return batches, true_quantiles(spec.model, grid)


def delta_true(model: str) -> float:
    """Sum of adjacent-level L1 distances between the underlying laws.

    For the normal R-models this is the total variation of the mean path;
    S-model values integrate the exact quantile differences on a fine grid.
    """
    if model in R_MODELS:
        mu = np.asarray(_R_MU[model])
        return float(np.sum(np.abs(np.diff(mu))))
    fine = default_grid(2000)
    qs = true_quantiles(model, fine)
    return float(sum(wasserstein_dist(qs[i], qs[i + 1], q=1) for i in range(len(qs) - 1)))


# ---------------------------------------------------------------------------
# trending fixtures
# ---------------------------------------------------------------------------

def _monotone(seq):
    d = np.diff(seq)
    return np.all(d >= 0) or np.all(d <= 0)


def _fixture_stochastic_order(base: QuantileFunction, shifts):
    shifts = np.asarray(shifts, dtype=float)
    if not _monotone(shifts):
        raise ValueError("shifts must be monotone")
    return [QuantileFunction(base.grid, base.values + s) for s in shifts]


def _fixture_quantile_mixture(start: QuantileFunction, end: QuantileFunction, omegas):
    if not start.grid.same_as(end.grid):
        raise ValueError("start and end must share a grid")
    om = np.asarray(omegas, dtype=float)
    if np.any(om < 0) or np.any(om > 1) or not _monotone(om):
        raise ValueError("omegas must be a monotone sequence within [0, 1]")
    signs = np.sign(start.values - end.values)
    signs = signs[signs != 0]
    if np.count_nonzero(np.diff(signs) != 0) > 1:
        raise ValueError("start - end must change sign at most once across quantiles")
    return [QuantileFunction(start.grid, w * start.values + (1 - w) * end.values)
            for w in om]


def _validate_migration_graph(moves, n_components):
    edges = set()
    for step in moves:
        for i, j, amount in step:
            if amount == 0:
                continue
            if amount < 0:
                raise ValueError("migration amounts must be positive; swap i and j instead")
            if not (0 <= i < n_components and 0 <= j < n_components) or i == j:
                raise ValueError(f"bad migration ({i} -> {j})")
            step_dir = 1 if j > i else -1
            for k in range(i, j, step_dir):
                edges.add((k, k + step_dir))
    for u, v in edges:
        if (v, u) in edges:
            raise ValueError(f"migration graph has a cycle between components {u} and {v}")
    doubly_fed = sum(
        1 for v in range(n_components)
        if (v - 1, v) in edges and (v + 1, v) in edges
    )
    if doubly_fed > 1:
        raise ValueError("migration graph has more than one node with two incoming edges")


def _gaussian_mixture_quantiles(means, scale, pis, probs):
    lo = np.full(probs.size, means.min() - 12.0 * scale)
    hi = np.full(probs.size, means.max() + 12.0 * scale)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        cdf = norm.cdf((mid[:, None] - means[None, :]) / scale) @ pis
        high = cdf >= probs
        hi[high] = mid[high]
        lo[~high] = mid[~high]
    return 0.5 * (lo + hi)


def _fixture_mixture_migration(means, scale, initial, moves, grid):
    means = np.asarray(means, dtype=float)
    if np.any(np.diff(means) < 0):
        raise ValueError("component means must be nondecreasing (stochastic order)")
    if scale <= 0:
        raise ValueError("scale must be positive")
    pis = np.asarray(initial, dtype=float).copy()
    K = means.size
    if pis.shape != (K,) or np.any(pis < 0) or abs(pis.sum() - 1.0) > 1e-9:
        raise ValueError("initial proportions must form a length-K simplex vector")
    _validate_migration_graph(moves, K)
    paths = [pis.copy()]
    for step in moves:
        for i, j, amount in step:
            pis[i] -= amount
            pis[j] += amount
        if np.any(pis < -1e-12) or np.any(pis > 1 + 1e-12):
            raise ValueError("migrations drive a mixing proportion outside [0, 1]")
        paths.append(np.clip(pis, 0.0, 1.0).copy())
    out = []
    for pi in paths:
        q = _gaussian_mixture_quantiles(means, scale, pi / pi.sum(), grid.probs)
        out.append(QuantileFunction(grid, np.maximum.accumulate(q)))
    return out


def trend_fixture(kind: str, **params):
    """Construct a provably trending sequence of quantile functions.

    Kinds: ``stochastic_order`` (base + monotone location shifts),
    ``quantile_mixture`` (convex path between two single-crossing
    endpoints), ``mixture_migration`` (Gaussian mixture components with
    mass migrating along an acyclic adjacent-component graph with at most
    one doubly-fed node).  The output is verified against the trend
    definition before being returned.
    """
    builders = {
        "stochastic_order": _fixture_stochastic_order,
        "quantile_mixture": _fixture_quantile_mixture,
        "mixture_migration": _fixture_mixture_migration,
    }
    if kind not in builders:
        raise ValueError(f"unknown fixture kind {kind!r}")
    out = builders[kind](**params)
    if not follows_trend(out):
        raise AssertionError("fixture construction produced a non-trending sequence")
    return out


# ---------------------------------------------------------------------------
# evaluation metrics
# ---------------------------------------------------------------------------

def wasserstein_error(estimated, truth) -> float:
    """Sum over levels of squared L2 distances between estimate and truth."""
    estimated = list(estimated)
    truth = list(truth)
    if len(estimated) != len(truth):
        raise ValueError("sequences must have equal length")
    return float(sum(wasserstein_dist(e, t, q=2) ** 2 for e, t in zip(estimated, truth)))


def classification_metrics(pvalues, labels, alpha: float, statistics=None):
    """(FPR, TPR, AUROC) of p-values against trending/null ground truth.

    Rejection is p <= alpha.  The ROC ranks features by ascending p-value
    with ties broken by descending test statistic; residual ties score 1/2.
    """
    p = np.asarray(pvalues, dtype=float)
    lab = np.asarray(labels)
    if p.shape != lab.shape:
        raise ValueError("pvalues and labels must align")
    bad = set(lab.tolist()) - {"trending", "null"}
    if bad:
        raise ValueError(f"labels must be 'trending' or 'null', got {sorted(bad)}")
    trending = lab == "trending"
    if trending.all() or not trending.any():
        raise ValueError("AUROC needs both classes present")
    stats = np.zeros_like(p) if statistics is None else np.asarray(statistics, dtype=float)
    fpr = float(np.mean(p[~trending] <= alpha))
    tpr = float(np.mean(p[trending] <= alpha))
    pt, st = p[trending], stats[trending]
    pn, sn = p[~trending], stats[~trending]
    better = (pt[:, None] < pn[None, :]) | (
        (pt[:, None] == pn[None, :]) & (st[:, None] > sn[None, :])
    )
    tied = (pt[:, None] == pn[None, :]) & (st[:, None] == sn[None, :])
    auroc = float((better.sum() + 0.5 * tied.sum()) / (pt.size * pn.size))
    return fpr, tpr, auroc
